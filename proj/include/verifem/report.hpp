#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace verifem {

enum class BoundKind { guaranteed_upper, guaranteed_lower, indicator };

std::string to_string(BoundKind kind);

struct EstimateReport {
  std::string estimator;
  double eta = 0.0;
  // Per-element contributions with sum of squares equal to eta^2; may be empty.
  std::vector<double> indicators;
  BoundKind kind = BoundKind::indicator;
  std::optional<double> effectivity;
  std::string backend;
  std::vector<std::string> caveats;
  std::map<std::string, double> constants;

  bool unconditional() const { return caveats.empty(); }
  void set_reference(double error) {
    if (error > 0.0) effectivity = eta / error;
  }
};

// Report whose eta is the root of the summed squared indicators.
EstimateReport report_from_indicators(std::string estimator, BoundKind kind, std::vector<double> indicators);

struct GoalBounds {
  std::string method;
  double lower = 0.0;
  double upper = 0.0;
  double corrected = 0.0;
  double correction = 0.0;
  double half_width = 0.0;
  bool guaranteed = false;
  std::vector<std::string> caveats;
  std::map<std::string, double> constants;
};

// Symmetric interval around q_h + correction.
GoalBounds centered_bounds(std::string method, double q_h, double correction, double half_width, bool guaranteed);

}  // namespace verifem
