#include "verifem/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "verifem/recovery.hpp"
#include "verifem/residual.hpp"

namespace verifem {

void AdaptConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda out of [0,1]");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  const auto& names = estimator_names();
  if (std::find(names.begin(), names.end(), estimator) == names.end())
    throw std::invalid_argument("unknown estimator: " + estimator);
  if (!has_indicators(estimator)) throw std::invalid_argument("estimator " + estimator + " has no element indicators");
  if (options.fe_enrichment < 1 || options.patch_degree < 1) throw std::invalid_argument("enrichment degrees must be at least 1");
  if (mode == AdaptMode::goal && estimator != "cre_analytic" && estimator != "cre_fe")
    throw std::invalid_argument("goal mode needs estimator cre_analytic or cre_fe");
}

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names{"zz", "spr", "explicit", "flux_free", "cre_analytic", "cre_fe", "richardson"};
  return names;
}

bool has_indicators(const std::string& estimator) { return estimator != "richardson"; }

namespace {

FluxBackend backend_of(const std::string& estimator) {
  if (estimator == "cre_analytic") return FluxBackend::analytic;
  if (estimator == "cre_fe") return FluxBackend::fe;
  throw std::invalid_argument("not an equilibration estimator: " + estimator);
}

EstimateReport richardson_report(const DiffusionProblem& problem, const FeFunction& u_h) {
  const auto fine = make_space(uniform_refine(u_h.space->mesh()));
  EstimateReport r;
  r.estimator = "richardson";
  r.kind = BoundKind::indicator;
  r.backend = "uniform_refine";
  r.eta = richardson_estimate(problem, u_h, solve(problem, fine));
  r.constants["alpha"] = 1.0;
  return r;
}

}  // namespace

EstimateReport run_estimator(const std::string& name, const DiffusionProblem& problem, const FeFunction& u_h,
                             const EstimatorOptions& options) {
  EstimateReport r;
  if (name == "zz") {
    const auto q = flux(problem, u_h);
    r = recovery_estimate(problem, zz_average(q), q, "zz");
  } else if (name == "spr") {
    const auto q = flux(problem, u_h);
    r = recovery_estimate(problem, spr_recover(q), q, "spr");
  } else if (name == "explicit") {
    r = explicit_indicators(residual_data(problem, u_h));
  } else if (name == "flux_free") {
    r = flux_free_estimate(problem, flux_free_patches(residual_data(problem, u_h), problem, options.patch_degree));
  } else if (name == "cre_analytic" || name == "cre_fe") {
    r = primal_side(problem, u_h, backend_of(name), options.fe_enrichment).report;
  } else if (name == "richardson") {
    r = richardson_report(problem, u_h);
  } else {
    throw std::invalid_argument("unknown estimator: " + name);
  }
  if (problem.exact) r.set_reference(reference_energy_error(problem, u_h));
  return r;
}

GoalStep goal_step(const DiffusionProblem& problem, const QuantityOfInterest& Q, const FeFunction& u_h,
                   const std::string& estimator, const EstimatorOptions& options) {
  GoalStep s;
  s.adjoint = solve_adjoint(problem, Q, u_h.space);
  const auto P = primal_side(problem, u_h, backend_of(estimator), options.fe_enrichment);
  const auto D = adjoint_side(problem, Q, s.adjoint, FluxBackend::automatic, options.fe_enrichment);
  s.cre = cre_goal_bound(problem, qoi_eval(problem, Q, u_h), P, D);
  s.indicators = local_goal_indicators(s.cre);
  return s;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRecord>& records) {
  out << "iteration,N,h,eta,ref_error,i_eff,seconds\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    out << r.iteration << ',' << r.N << ',' << num(r.h) << ',' << num(r.eta) << ','
        << (r.ref_error ? num(*r.ref_error) : "") << ',' << (r.i_eff ? num(*r.i_eff) : "") << ',' << num(r.seconds)
        << '\n';
  }
}

std::set<int> mark_max(const std::vector<double>& indicators, double lambda) {
  if (indicators.empty()) throw std::invalid_argument("empty indicator array");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda out of [0,1]");
  double mx = 0.0;
  for (double v : indicators) {
    if (!std::isfinite(v)) throw std::invalid_argument("indicator is not finite");
    mx = std::max(mx, std::abs(v));
  }
  const double theta = lambda * mx;
  std::set<int> marked;
  for (size_t K = 0; K < indicators.size(); ++K)
    if (std::abs(indicators[K]) >= theta) marked.insert(static_cast<int>(K));
  return marked;
}

std::vector<double> size_map(const std::vector<double>& indicators, double tolerance, int p) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (p < 1) throw std::invalid_argument("degree must be at least 1");
  if (indicators.empty()) throw std::invalid_argument("empty indicator array");
  constexpr double d = 2.0;
  double smallest = std::numeric_limits<double>::infinity();
  for (double v : indicators) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("indicators must be finite and nonnegative");
    if (v > 0.0) smallest = std::min(smallest, v);
  }
  if (!std::isfinite(smallest)) throw std::invalid_argument("all indicators vanish");
  std::vector<double> eta(indicators);
  for (double& v : eta)
    if (v == 0.0) v = smallest * 1e-6;
  const double a = 2.0 / (2 * p + d), b = 2 * d / (2 * p + d);
  double S = 0.0;
  for (double v : eta) S += std::pow(v, b);
  const double num = std::pow(tolerance, 1.0 / p), den = std::pow(S, 1.0 / (2 * p));
  std::vector<double> r(eta.size());
  double constraint = 0.0;
  for (size_t K = 0; K < eta.size(); ++K) {
    r[K] = num / (std::pow(eta[K], a) * den);
    constraint += std::pow(r[K], 2 * p) * eta[K] * eta[K];
  }
  const double t2 = tolerance * tolerance;
  if (std::abs(constraint - t2) > 1e-10 * t2) throw std::logic_error("size map violates its constraint");
  return r;
}

namespace {

template <class F>
auto at_iteration(int it, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("iteration " + std::to_string(it) + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw std::domain_error("iteration " + std::to_string(it) + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("iteration " + std::to_string(it) + ": " + e.what());
  }
}

using Clock = std::chrono::steady_clock;

}  // namespace

AdaptResult adapt_solve(const DiffusionProblem& problem, const MeshPtr& mesh, const AdaptConfig& config,
                        const GoalTarget* goal, const IterationObserver& observer) {
  config.validate();
  if (config.mode == AdaptMode::goal && !goal) throw std::invalid_argument("goal mode needs a quantity of interest");
  AdaptResult result;
  MeshPtr m = mesh;
  for (int it = 0; it < config.max_iterations; ++it) {
    const auto start = Clock::now();
    const auto space = make_space(m);
    FeFunction u = at_iteration(it, [&] { return solve(problem, space); });
    StudyRecord rec;
    rec.iteration = it;
    rec.N = space->dofs();
    rec.h = m->h();
    EstimateReport report;
    GoalStep step;
    std::vector<double> ind;
    if (config.mode == AdaptMode::energy) {
      report = at_iteration(it, [&] { return run_estimator(config.estimator, problem, u, config.options); });
      rec.eta = report.eta;
      ind = report.indicators;
      if (problem.exact) rec.ref_error = reference_energy_error(problem, u);
    } else {
      step = at_iteration(it, [&] { return goal_step(problem, goal->Q, u, config.estimator, config.options); });
      rec.eta = step.cre.bounds.half_width;
      ind = step.indicators.values;
      for (double& v : ind) v = std::abs(v);
      if (goal->reference)
        rec.ref_error = std::abs(*goal->reference - (step.cre.bounds.corrected - step.cre.bounds.correction));
    }
    if (rec.ref_error && *rec.ref_error > 0.0) rec.i_eff = rec.eta / *rec.ref_error;
    const bool last = rec.eta <= config.tolerance || it + 1 == config.max_iterations;
    std::set<int> marked;
    if (!last) marked = mark_max(ind, config.lambda);
    if (config.timing) rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result.records.push_back(rec);
    if (observer) {
      IterationState st{it, &u, &ind, &marked, config.mode == AdaptMode::energy ? &report : nullptr,
                        config.mode == AdaptMode::goal ? &step : nullptr};
      observer(st);
    }
    if (last) {
      result.solution = std::move(u);
      break;
    }
    m = refine(m, marked);
  }
  return result;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("data size mismatch");
  if (x.size() < 3) throw std::invalid_argument("at least 3 data points are needed for the fit");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit data must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw std::invalid_argument("fit abscissae are all equal");
  return (n * sxy - sx * sy) / den;
}

Rates fit_rates(const std::vector<StudyRecord>& records, std::size_t skip) {
  std::vector<double> N, h, e;
  for (size_t i = skip; i < records.size(); ++i) {
    if (!records[i].ref_error) throw std::invalid_argument("record without reference error");
    N.push_back(records[i].N);
    h.push_back(records[i].h);
    e.push_back(*records[i].ref_error);
  }
  return {fitted_slope(N, e), fitted_slope(h, e)};
}

StudyResult convergence_study(const DiffusionProblem& problem, const MeshPtr& mesh, StudyMode mode, int iterations,
                              const AdaptConfig& config, const IterationObserver& observer) {
  if (!problem.exact) throw std::invalid_argument("convergence study needs a reference solution");
  if (config.mode != AdaptMode::energy) throw std::invalid_argument("convergence study runs in energy mode");
  if (iterations < 3) throw std::invalid_argument("at least 3 data points are needed for the fit");
  StudyResult out;
  if (mode == StudyMode::adaptive) {
    AdaptConfig c = config;
    c.max_iterations = iterations;
    c.tolerance = std::numeric_limits<double>::min();
    out.records = adapt_solve(problem, mesh, c, nullptr, observer).records;
  } else {
    const auto& names = estimator_names();
    if (std::find(names.begin(), names.end(), config.estimator) == names.end())
      throw std::invalid_argument("unknown estimator: " + config.estimator);
    MeshPtr m = mesh;
    for (int it = 0; it < iterations; ++it) {
      const auto start = Clock::now();
      const auto space = make_space(m);
      const FeFunction u = at_iteration(it, [&] { return solve(problem, space); });
      const EstimateReport report = at_iteration(it, [&] { return run_estimator(config.estimator, problem, u, config.options); });
      StudyRecord rec;
      rec.iteration = it;
      rec.N = space->dofs();
      rec.h = m->h();
      rec.eta = report.eta;
      rec.ref_error = reference_energy_error(problem, u);
      if (*rec.ref_error > 0.0) rec.i_eff = rec.eta / *rec.ref_error;
      if (config.timing) rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
      out.records.push_back(rec);
      if (observer) {
        const std::set<int> none;
        observer({it, &u, &report.indicators, &none, &report, nullptr});
      }
      if (it + 1 < iterations) m = uniform_refine(m);
    }
  }
  out.rates = fit_rates(out.records);
  return out;
}

}  // namespace verifem
