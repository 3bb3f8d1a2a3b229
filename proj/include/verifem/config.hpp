#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "verifem/adapt.hpp"

namespace verifem {

// Input error; line is 0 when it does not refer to a config line.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct CustomProblemConfig {
  double kappa = 1.0;
  double source = 1.0;
  double neumann = 0.0;
  std::string layout = "all_dirichlet";
};

struct GoalConfig {
  std::string qoi = "box_average";
  std::array<double, 4> box{0.25, 0.5, 0.25, 0.5};
  std::array<double, 2> direction{1.0, 0.0};
  std::vector<std::string> methods{"cre", "cre_enriched"};
  // auto, cre_analytic or cre_fe for the primal flux.
  std::string estimator = "auto";
  std::optional<double> reference;
  std::optional<double> scaling;
};

struct StudyConfig {
  StudyMode mode = StudyMode::uniform;
  int iterations = 4;
  // Leading iterations left out of the rate fit.
  int skip = 0;
};

struct RunConfig {
  std::string problem;
  int n = 8;
  std::vector<std::string> estimators;
  std::string output = "verifem_out";
  // auto projects a pointwise source when an analytic flux is requested.
  std::string source_projection = "auto";
  bool timing = false;
  bool vtk = true;
  EstimatorOptions options;
  CustomProblemConfig custom;
  std::optional<GoalConfig> goal;
  bool has_adapt = false;
  AdaptConfig adapt;
  bool has_study = false;
  StudyConfig study;
};

const std::vector<std::string>& problem_names();
const std::vector<std::string>& goal_method_names();

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace verifem
