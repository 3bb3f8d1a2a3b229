#include "verifem/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "verifem/recovery.hpp"
#include "verifem/residual.hpp"
#include "verifem/vtk.hpp"

namespace verifem {

using Json = nlohmann::ordered_json;

std::optional<Command> command_from(const std::string& name) {
  if (name == "solve") return Command::solve;
  if (name == "estimate") return Command::estimate;
  if (name == "adapt") return Command::adapt;
  if (name == "study") return Command::study;
  return std::nullopt;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::solve: return "solve";
    case Command::estimate: return "estimate";
    case Command::adapt: return "adapt";
    case Command::study: return "study";
  }
  return "";
}

namespace {

constexpr double kSlack = 1e-8;

// Caveats under which a guaranteed report is not held to the reference ordering.
bool checked(const EstimateReport& r) {
  static const std::set<std::string> loose{"estimated_constant", "neumann_projection", "equilibrium_defect",
                                           "unscaled_constant"};
  for (const auto& c : r.caveats)
    if (loose.count(c)) return false;
  return true;
}

bool needs_analytic(const RunConfig& c, Command command) {
  switch (command) {
    case Command::solve: return false;
    case Command::estimate:
      for (const auto& e : c.estimators)
        if (e == "cre_analytic") return true;
      return c.goal && c.goal->estimator == "cre_analytic";
    case Command::adapt:
    case Command::study: return c.adapt.estimator == "cre_analytic";
  }
  return false;
}

std::string goal_estimator(const RunConfig& c, const DiffusionProblem& p) {
  if (c.goal->estimator != "auto") return c.goal->estimator;
  return p.source.elementwise_constant() ? "cre_analytic" : "cre_fe";
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const EstimateReport& r) {
  Json j;
  j["estimator"] = r.estimator;
  j["kind"] = to_string(r.kind);
  j["eta"] = r.eta;
  j["effectivity"] = optional_number(r.effectivity);
  j["backend"] = r.backend;
  j["caveats"] = r.caveats;
  j["constants"] = Json::object();
  for (const auto& [k, v] : r.constants) j["constants"][k] = v;
  return j;
}

Json to_json(const GoalBounds& b) {
  Json j;
  j["method"] = b.method;
  j["lower"] = b.lower;
  j["corrected"] = b.corrected;
  j["upper"] = b.upper;
  j["correction"] = b.correction;
  j["half_width"] = b.half_width;
  j["guaranteed"] = b.guaranteed;
  j["caveats"] = b.caveats;
  j["constants"] = Json::object();
  for (const auto& [k, v] : b.constants) j["constants"][k] = v;
  return j;
}

Json to_json(const StudyRecord& r) {
  Json j;
  j["iteration"] = r.iteration;
  j["N"] = r.N;
  j["h"] = r.h;
  j["eta"] = r.eta;
  j["ref_error"] = optional_number(r.ref_error);
  j["i_eff"] = optional_number(r.i_eff);
  j["seconds"] = r.seconds;
  return j;
}

Json mesh_json(const Mesh& m) {
  Json j;
  j["vertices"] = m.num_vertices();
  j["elements"] = m.num_elements();
  j["h"] = m.h();
  return j;
}

// Like Json::dump(2), with every float printed to 17 significant digits.
void write_json(std::ostream& out, const Json& j, int depth = 0) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out << ",\n";
        first = false;
        out << pad << Json(k).dump() << ": ";
        write_json(out, v, depth + 1);
      }
      out << '\n' << close << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        write_json(out, j[i], depth + 1);
      }
      out << '\n' << close << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf;
      return;
    }
    default: out << j.dump();
  }
}

std::string mesh_file(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mesh_%02d.vtk", iteration);
  return buf;
}

class Output {
 public:
  Output(std::filesystem::path dir, bool vtk) : dir_(std::move(dir)), vtk_(vtk) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError(0, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name);
    if (!out) throw ConfigError(0, "cannot write " + (dir_ / name).string());
    return out;
  }

  void mesh(int iteration, const FeFunction& u, const DiffusionProblem& problem, VtkFields fields) const {
    if (!vtk_) return;
    const Mesh& m = u.mesh();
    fields.point_scalars.insert(fields.point_scalars.begin(),
                                {"u", std::vector<double>(u.values.data(), u.values.data() + u.values.size())});
    fields.cell_vectors.push_back({"flux", flux(problem, u).values});
    auto out = open(mesh_file(iteration));
    write_vtk(out, m, fields);
  }

  void study(const std::vector<StudyRecord>& records) const {
    auto out = open("study.csv");
    write_study_csv(out, records);
  }

  void report(const Json& j) const {
    auto out = open("report.json");
    write_json(out, j);
    out << '\n';
  }

 private:
  std::filesystem::path dir_;
  bool vtk_;
};

struct EstimateSet {
  std::vector<EstimateReport> reports;
  std::optional<TractionSet> tractions;
};

EstimateSet run_estimators(const RunConfig& c, const DiffusionProblem& p, const FeFunction& u) {
  EstimateSet out;
  for (const auto& name : c.estimators) {
    if (name == "flux_free") {
      const auto patches = flux_free_patches(residual_data(p, u), p, c.options.patch_degree);
      auto upper = flux_free_estimate(p, patches);
      auto lower = flux_free_lower_bound(p, patches, u);
      const auto v = flux_free_test_function(patches, u);
      const auto w = FeFunction{v.space, prolong(u, v.space).values + v.values};
      auto energy = energy_lower_bound(p, w, u);
      if (p.exact) {
        const double e = reference_energy_error(p, u);
        for (auto* r : {&upper, &lower, &energy}) r->set_reference(e);
      }
      out.reports.push_back(std::move(upper));
      out.reports.push_back(std::move(lower));
      out.reports.push_back(std::move(energy));
    } else if (name == "cre_analytic" || name == "cre_fe") {
      auto side = primal_side(p, u, name == "cre_analytic" ? FluxBackend::analytic : FluxBackend::fe, c.options.fe_enrichment);
      side.report.estimator = name;
      if (p.exact) side.report.set_reference(reference_energy_error(p, u));
      if (!out.tractions) out.tractions = side.tractions;
      out.reports.push_back(std::move(side.report));
    } else {
      out.reports.push_back(run_estimator(name, p, u, c.options));
    }
  }
  return out;
}

QuantityOfInterest make_qoi(const GoalConfig& g, const MeshPtr& mesh) {
  if (g.qoi == "box_average") return subdomain_average(mesh, g.box[0], g.box[1], g.box[2], g.box[3]);
  std::vector<int> elements;
  for (int K = 0; K < mesh->num_elements(); ++K) {
    const Point x = mesh->centroid(K);
    if (x.x() >= g.box[0] && x.x() <= g.box[1] && x.y() >= g.box[2] && x.y() <= g.box[3]) elements.push_back(K);
  }
  return flux_average(mesh, elements, Vec2(g.direction[0], g.direction[1]));
}

struct GoalResult {
  double q_h = 0.0;
  std::vector<GoalBounds> bounds;
  std::vector<double> indicators;
  FeFunction adjoint;
};

GoalResult run_goal(const RunConfig& c, const DiffusionProblem& p, const QuantityOfInterest& Q, const FeFunction& u) {
  const GoalConfig& g = *c.goal;
  const std::string est = goal_estimator(c, p);
  GoalResult out;
  out.q_h = qoi_eval(p, Q, u);
  const GoalStep step = goal_step(p, Q, u, est, c.options);
  out.adjoint = step.adjoint;
  out.indicators = step.indicators.values;
  const auto backend = est == "cre_analytic" ? FluxBackend::analytic : FluxBackend::fe;
  const auto P = primal_side(p, u, backend, c.options.fe_enrichment);
  const auto D = adjoint_side(p, Q, step.adjoint, FluxBackend::automatic, c.options.fe_enrichment);
  std::optional<SpacePtr> fine;
  auto fine_space = [&] {
    if (!fine) fine = make_space(uniform_refine(u.space->mesh()));
    return *fine;
  };
  std::optional<FeFunction> adjoint_plus;
  auto zp = [&]() -> const FeFunction& {
    if (!adjoint_plus) adjoint_plus = solve_adjoint(p, Q, fine_space());
    return *adjoint_plus;
  };
  for (const auto& m : g.methods) {
    if (m == "cre") {
      out.bounds.push_back(step.cre.bounds);
    } else if (m == "cre_weak") {
      out.bounds.push_back(step.cre.weak);
    } else if (m == "cre_enriched") {
      out.bounds.push_back(enriched_cre_goal_bound(p, out.q_h, P, adjoint_side(p, Q, zp(), FluxBackend::automatic,
                                                                                c.options.fe_enrichment)));
    } else if (m == "cauchy_schwarz") {
      out.bounds.push_back(cs_goal_bound(out.q_h, P.report, D.report));
    } else if (m == "parallelogram") {
      const double s = g.scaling ? *g.scaling : optimal_scaling(P, D);
      const auto up = solve(p, fine_space());
      out.bounds.push_back(parallelogram_bound(out.q_h, parallelogram_chi(p, Q, P, D, up, zp(), s)));
    } else if (m == "dwr") {
      auto b = centered_bounds("dwr", out.q_h, dwr_estimate(p, u, zp()), 0.0, false);
      b.caveats.push_back("estimate_only");
      out.bounds.push_back(b);
    }
  }
  return out;
}

Json problem_json(const RunConfig& c, const ProblemSetup& s) {
  Json j;
  j["name"] = c.problem;
  j["n"] = c.n;
  j["source_projected"] = s.projected;
  if (s.problem.projection_defect) j["projection_defect"] = *s.problem.projection_defect;
  j["reference_available"] = s.problem.exact.has_value();
  return j;
}

Json solution_json(const DiffusionProblem& p, const FeFunction& u) {
  Json j;
  j["dofs"] = u.space->dofs();
  j["energy_norm"] = energy_norm(p, u);
  j["ref_error"] = p.exact ? Json(reference_energy_error(p, u)) : Json(nullptr);
  return j;
}

Json goal_json(const RunConfig& c, const GoalResult& r) {
  Json j;
  j["qoi"] = c.goal->qoi;
  j["q_h"] = r.q_h;
  j["reference"] = optional_number(c.goal->reference);
  j["bounds"] = Json::array();
  for (const auto& b : r.bounds) j["bounds"].push_back(to_json(b));
  return j;
}

VtkFields estimate_fields(const std::vector<EstimateReport>& reports) {
  VtkFields f;
  for (const auto& r : reports)
    if (!r.indicators.empty()) f.cell_scalars.push_back({r.estimator, r.indicators});
  return f;
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from, const std::string& prefix = "") {
  for (const auto& s : from) to.push_back(prefix + s);
}

std::vector<std::string> execute(Command command, const RunConfig& c, const Output& out) {
  const ProblemSetup s = make_problem(c, command);
  const DiffusionProblem& p = s.problem;
  Json report;
  report["command"] = to_string(command);
  report["problem"] = problem_json(c, s);
  std::vector<std::string> violations;
  std::optional<GoalTarget> target;
  if (c.goal) target = GoalTarget{make_qoi(*c.goal, s.mesh), c.goal->reference};

  if (command == Command::solve || command == Command::estimate) {
    const auto space = make_space(s.mesh);
    const FeFunction u = solve(p, space);
    report["mesh"] = mesh_json(*s.mesh);
    report["solution"] = solution_json(p, u);
    VtkFields fields;
    if (command == Command::estimate) {
      if (c.estimators.empty() && !c.goal) throw ConfigError(0, "estimate needs estimators or a [goal] section");
      const std::optional<double> ref = p.exact ? std::optional<double>(reference_energy_error(p, u)) : std::nullopt;
      auto set = run_estimators(c, p, u);
      report["estimates"] = Json::array();
      for (const auto& r : set.reports) report["estimates"].push_back(to_json(r));
      append(violations, check_estimates(set.reports, ref));
      fields = estimate_fields(set.reports);
      if (set.tractions) {
        auto t = out.open("tractions.csv");
        set.tractions->write_csv(t);
      }
      if (c.goal) {
        const auto g = run_goal(c, p, target->Q, u);
        report["goal"] = goal_json(c, g);
        append(violations, check_goal(g.bounds, c.goal->reference));
        fields.point_scalars.push_back({"adjoint", std::vector<double>(g.adjoint.values.data(),
                                                                       g.adjoint.values.data() + g.adjoint.values.size())});
        fields.cell_scalars.push_back({"goal_indicator", g.indicators});
      }
    }
    out.mesh(0, u, p, fields);
  } else {
    StudyResult result;
    const bool goal_mode = command == Command::adapt && c.adapt.mode == AdaptMode::goal;
    if (goal_mode && !target) throw ConfigError(0, "adapt mode=goal needs a [goal] section");
    Json last;
    auto observe = [&](const IterationState& st) {
      const std::string it = "iteration " + std::to_string(st.iteration) + ": ";
      VtkFields f;
      f.cell_scalars.push_back({"indicator", *st.indicators});
      std::vector<double> marked(st.indicators->size(), 0.0);
      for (int K : *st.marked) marked[K] = 1.0;
      f.cell_scalars.push_back({"marked", marked});
      last = Json::object();
      last["mesh"] = mesh_json(st.solution->mesh());
      if (st.report) {
        const std::optional<double> ref =
            p.exact ? std::optional<double>(reference_energy_error(p, *st.solution)) : std::nullopt;
        append(violations, check_estimates({*st.report}, ref), it);
        last["estimate"] = to_json(*st.report);
      }
      if (st.goal) {
        std::vector<GoalBounds> b{st.goal->cre.bounds};
        append(violations, check_goal(b, target->reference), it);
        last["goal"] = to_json(st.goal->cre.bounds);
        f.point_scalars.push_back({"adjoint", std::vector<double>(st.goal->adjoint.values.data(),
                                                                  st.goal->adjoint.values.data() +
                                                                      st.goal->adjoint.values.size())});
      }
      out.mesh(st.iteration, *st.solution, p, f);
    };
    if (command == Command::adapt) {
      result.records = adapt_solve(p, s.mesh, c.adapt, target ? &*target : nullptr, observe).records;
    } else {
      result = convergence_study(p, s.mesh, c.study.mode, c.study.iterations, c.adapt, observe);
    }
    report["final"] = last;
    report["study"] = Json::array();
    for (const auto& r : result.records) report["study"].push_back(to_json(r));
    const std::size_t skip = command == Command::study ? static_cast<std::size_t>(c.study.skip) : 0;
    bool fit = result.records.size() >= skip + 3;
    for (const auto& r : result.records) fit = fit && r.ref_error && *r.ref_error > 0.0;
    if (command == Command::study && !fit) throw ConfigError(0, "study needs at least 3 fitted iterations after skip");
    if (fit) {
      const Rates rates = fit_rates(result.records, skip);
      report["rates"] = {{"skip", skip}, {"slope_N", rates.slope_N}, {"slope_h", rates.slope_h}};
    }
    out.study(result.records);
  }
  report["contract"] = {{"ok", violations.empty()}, {"violations", violations}};
  out.report(report);
  return violations;
}

}  // namespace

ProblemSetup make_problem(const RunConfig& c, Command command) {
  ProblemSetup s;
  if (c.problem == "sin_sin") {
    s.problem = sin_sin_problem();
    s.mesh = unit_square_mesh(c.n);
  } else if (c.problem == "fig1_square") {
    s.problem = fig1_problem();
    s.mesh = unit_square_mesh(c.n, "fig1");
  } else if (c.problem == "lshape_singular") {
    s.problem = lshape_problem();
    s.mesh = l_shape_mesh(c.n);
  } else if (c.problem == "custom") {
    const auto& cu = c.custom;
    s.problem.name = "custom";
    s.problem.coefficient = [k = cu.kappa](const Point&) { return Mat2(k * Mat2::Identity()); };
    s.problem.source = SourceTerm::constant(cu.source);
    if (cu.neumann != 0.0) s.problem.neumann = [g = cu.neumann](const Point&, const Vec2&) { return g; };
    s.mesh = unit_square_mesh(c.n, cu.layout);
  } else {
    throw ConfigError(0, "unknown problem '" + c.problem + "'");
  }
  const bool pointwise = !s.problem.source.elementwise_constant();
  const bool project = c.source_projection == "on" || (c.source_projection == "auto" && needs_analytic(c, command));
  if (pointwise && project) {
    s.problem = project_source(s.problem, s.mesh);
    s.projected = true;
  }
  if (pointwise && !project && needs_analytic(c, command))
    throw ConfigError(0, "cre_analytic needs a per-element-constant source; set source_projection=auto or on");
  return s;
}

std::vector<std::string> check_estimates(const std::vector<EstimateReport>& reports, std::optional<double> ref_error) {
  std::vector<std::string> v;
  for (const auto& r : reports) {
    if (!std::isfinite(r.eta) || r.eta < 0.0) v.push_back(r.estimator + ": estimate is not a finite nonnegative number");
    if (r.estimator.rfind("cre", 0) == 0 && r.backend == "analytic")
      for (const auto& cv : r.caveats)
        if (cv == "equilibrium_defect") v.push_back(r.estimator + ": analytic flux is not equilibrated");
  }
  for (const auto& lo : reports) {
    if (lo.kind != BoundKind::guaranteed_lower || !checked(lo)) continue;
    if (ref_error && lo.eta > *ref_error * (1 + kSlack))
      v.push_back(lo.estimator + ": guaranteed lower bound exceeds the reference error");
    for (const auto& up : reports)
      if (up.kind == BoundKind::guaranteed_upper && checked(up) && lo.eta > up.eta * (1 + kSlack))
        v.push_back(lo.estimator + " exceeds " + up.estimator);
  }
  for (const auto& up : reports)
    if (up.kind == BoundKind::guaranteed_upper && checked(up) && ref_error && up.eta < *ref_error * (1 - kSlack))
      v.push_back(up.estimator + ": guaranteed upper bound is below the reference error");
  return v;
}

std::vector<std::string> check_goal(const std::vector<GoalBounds>& bounds, std::optional<double> reference) {
  std::vector<std::string> v;
  for (const auto& b : bounds) {
    const double slack = kSlack * std::max({1.0, std::abs(b.lower), std::abs(b.upper)});
    if (!(b.lower <= b.corrected + slack && b.corrected <= b.upper + slack))
      v.push_back(b.method + ": bounds are not ordered lower <= corrected <= upper");
    if (b.guaranteed && reference && (*reference < b.lower - slack || *reference > b.upper + slack))
      v.push_back(b.method + ": guaranteed interval misses the reference value");
  }
  return v;
}

int run(Command command, const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& err) {
  try {
    const Output out(out_dir, config.vtk);
    const auto violations = execute(command, config, out);
    for (const auto& s : violations) err << "contract violation: " << s << '\n';
    return violations.empty() ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "contract violation: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace verifem
