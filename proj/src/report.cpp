#include "verifem/report.hpp"

#include <cmath>
#include <numeric>

namespace verifem {

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::guaranteed_upper: return "guaranteed_upper";
    case BoundKind::guaranteed_lower: return "guaranteed_lower";
    case BoundKind::indicator: return "indicator";
  }
  return "unknown";
}

EstimateReport report_from_indicators(std::string estimator, BoundKind kind, std::vector<double> indicators) {
  EstimateReport r;
  r.estimator = std::move(estimator);
  r.kind = kind;
  double s = 0.0;
  for (double v : indicators) s += v * v;
  r.eta = std::sqrt(s);
  r.indicators = std::move(indicators);
  return r;
}

GoalBounds centered_bounds(std::string method, double q_h, double correction, double half_width, bool guaranteed) {
  GoalBounds b;
  b.method = std::move(method);
  b.correction = correction;
  b.corrected = q_h + correction;
  b.half_width = half_width;
  b.lower = b.corrected - half_width;
  b.upper = b.corrected + half_width;
  b.guaranteed = guaranteed;
  return b;
}

}  // namespace verifem
