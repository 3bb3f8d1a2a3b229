#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "verifem/goal.hpp"

namespace verifem {

enum class AdaptMode { energy, goal };

struct EstimatorOptions {
  // Local enrichment degree of the FE flux backend.
  int fe_enrichment = 3;
  // Patch enrichment degree of the flux-free estimator.
  int patch_degree = 2;
};

struct AdaptConfig {
  double lambda = 0.8;
  double tolerance = 1e-3;
  int max_iterations = 10;
  std::string estimator = "cre_analytic";
  AdaptMode mode = AdaptMode::energy;
  // Record wall-clock seconds; off keeps study output reproducible.
  bool timing = false;
  EstimatorOptions options;

  void validate() const;
};

// Estimator names accepted by run_estimator.
const std::vector<std::string>& estimator_names();
bool has_indicators(const std::string& estimator);

// Runs a named estimator on u_h. The effectivity is set when an exact solution is known.
EstimateReport run_estimator(const std::string& name, const DiffusionProblem& problem, const FeFunction& u_h,
                             const EstimatorOptions& options = {});

struct GoalTarget {
  QuantityOfInterest Q;
  std::optional<double> reference;
};

// Goal bound of the CRE family on one mesh with its signed local indicators.
struct GoalStep {
  FeFunction adjoint;
  GoalCre cre;
  GoalIndicators indicators;
};
GoalStep goal_step(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& u_h,
                   const std::string& estimator, const EstimatorOptions& options = {});

// Goal mode: eta is the bound half-width and ref_error is |Q(u) - Q(u_h)|.
struct StudyRecord {
  int iteration = 0;
  int N = 0;
  double h = 0.0;
  double eta = 0.0;
  std::optional<double> ref_error;
  std::optional<double> i_eff;
  double seconds = 0.0;
};

void write_study_csv(std::ostream& out, const std::vector<StudyRecord>& records);

// Elements with |eta_K| >= lambda max |eta_j|.
std::set<int> mark_max(const std::vector<double>& indicators, double lambda);

// Refinement ratios of the smooth closed-form optimal mesh (d = 2).
std::vector<double> size_map(const std::vector<double>& indicators, double tolerance, int p = 1);

struct IterationState {
  int iteration = 0;
  const FeFunction* solution = nullptr;
  const std::vector<double>* indicators = nullptr;
  const std::set<int>* marked = nullptr;
  const EstimateReport* report = nullptr;
  const GoalStep* goal = nullptr;
};
using IterationObserver = std::function<void(const IterationState&)>;

struct AdaptResult {
  FeFunction solution;
  std::vector<StudyRecord> records;
};

AdaptResult adapt_solve(const DiffusionProblem& problem, const MeshPtr& mesh, const AdaptConfig& config,
                        const GoalTarget* goal = nullptr, const IterationObserver& observer = {});

struct Rates {
  double slope_N = 0.0;
  double slope_h = 0.0;
};

// Least-squares slope of log y against log x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);
// Slopes of the reference error against N and h over records[skip..].
Rates fit_rates(const std::vector<StudyRecord>& records, std::size_t skip = 0);

enum class StudyMode { uniform, adaptive };

struct StudyResult {
  std::vector<StudyRecord> records;
  Rates rates;
};

// Uniform red refinement or the adaptive loop with the tolerance disabled.
StudyResult convergence_study(const DiffusionProblem& problem, const MeshPtr& mesh, StudyMode mode, int iterations,
                              const AdaptConfig& config = {}, const IterationObserver& observer = {});

}  // namespace verifem
