#include "verifem/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace verifem {

ConfigError::ConfigError(int line, const std::string& message)
    : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"fig1_square", "sin_sin", "lshape_singular", "custom"};
  return names;
}

const std::vector<std::string>& goal_method_names() {
  static const std::vector<std::string> names{"cauchy_schwarz", "cre", "cre_weak", "cre_enriched", "parallelogram", "dwr"};
  return names;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

struct Entry {
  int line;
  std::string value;
};

class Reader {
 public:
  explicit Reader(int line, std::string key, std::string value) : line_(line), key_(std::move(key)), value_(std::move(value)) {}

  double real() const {
    double v = 0.0;
    const char* b = value_.data();
    const char* e = b + value_.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || value_.empty()) fail("expected a number for '" + key_ + "'");
    return v;
  }
  int integer() const {
    int v = 0;
    const char* b = value_.data();
    const char* e = b + value_.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || value_.empty()) fail("expected an integer for '" + key_ + "'");
    return v;
  }
  bool boolean() const {
    if (value_ == "true") return true;
    if (value_ == "false") return false;
    fail("expected true or false for '" + key_ + "'");
  }
  std::string choice(const std::vector<std::string>& options) const {
    if (!contains(options, value_)) fail("invalid value '" + value_ + "' for '" + key_ + "'");
    return value_;
  }
  std::vector<std::string> list(const std::vector<std::string>& options) const {
    auto items = split(value_);
    std::set<std::string> seen;
    for (const auto& s : items) {
      if (s.empty()) fail("empty item in '" + key_ + "'");
      if (!contains(options, s)) fail("unknown name '" + s + "' in '" + key_ + "'");
      if (!seen.insert(s).second) fail("duplicate name '" + s + "' in '" + key_ + "'");
    }
    return items;
  }
  std::vector<double> reals(std::size_t count) const {
    const auto items = split(value_);
    if (items.size() != count) fail("expected " + std::to_string(count) + " numbers for '" + key_ + "'");
    std::vector<double> out;
    for (const auto& s : items) out.push_back(Reader(line_, key_, s).real());
    return out;
  }
  const std::string& text() const { return value_; }
  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(line_, message); }

 private:
  int line_;
  std::string key_;
  std::string value_;
};

using Handler = std::function<void(const Reader&)>;

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  bool has_goal = false;
  GoalConfig goal;
  std::map<std::string, std::map<std::string, Handler>> keys;
  auto& top = keys[""];
  top["problem"] = [&](const Reader& r) { c.problem = r.choice(problem_names()); };
  top["n"] = [&](const Reader& r) {
    c.n = r.integer();
    if (c.n < 1) r.fail("n must be at least 1");
  };
  top["estimators"] = [&](const Reader& r) { c.estimators = r.list(estimator_names()); };
  top["output"] = [&](const Reader& r) {
    if (r.text().empty()) r.fail("empty output directory");
    c.output = r.text();
  };
  top["source_projection"] = [&](const Reader& r) { c.source_projection = r.choice({"auto", "on", "off"}); };
  top["timing"] = [&](const Reader& r) { c.timing = r.boolean(); };
  top["vtk"] = [&](const Reader& r) { c.vtk = r.boolean(); };
  top["fe_enrichment"] = [&](const Reader& r) {
    c.options.fe_enrichment = r.integer();
    if (c.options.fe_enrichment < 1) r.fail("fe_enrichment must be at least 1");
  };
  top["patch_degree"] = [&](const Reader& r) {
    c.options.patch_degree = r.integer();
    if (c.options.patch_degree < 1) r.fail("patch_degree must be at least 1");
  };
  auto& custom = keys["custom"];
  custom["kappa"] = [&](const Reader& r) {
    c.custom.kappa = r.real();
    if (!(c.custom.kappa > 0.0)) r.fail("kappa must be positive");
  };
  custom["source"] = [&](const Reader& r) { c.custom.source = r.real(); };
  custom["neumann"] = [&](const Reader& r) { c.custom.neumann = r.real(); };
  custom["layout"] = [&](const Reader& r) { c.custom.layout = r.choice({"all_dirichlet", "fig1"}); };
  auto& g = keys["goal"];
  g["qoi"] = [&](const Reader& r) { goal.qoi = r.choice({"box_average", "flux_average"}); };
  g["box"] = [&](const Reader& r) {
    const auto v = r.reals(4);
    if (!(v[0] < v[1] && v[2] < v[3])) r.fail("box must satisfy x0 < x1 and y0 < y1");
    std::copy(v.begin(), v.end(), goal.box.begin());
  };
  g["direction"] = [&](const Reader& r) {
    const auto v = r.reals(2);
    std::copy(v.begin(), v.end(), goal.direction.begin());
  };
  g["methods"] = [&](const Reader& r) { goal.methods = r.list(goal_method_names()); };
  g["estimator"] = [&](const Reader& r) { goal.estimator = r.choice({"auto", "cre_analytic", "cre_fe"}); };
  g["reference"] = [&](const Reader& r) { goal.reference = r.real(); };
  g["scaling"] = [&](const Reader& r) {
    goal.scaling = r.real();
    if (!(*goal.scaling > 0.0)) r.fail("scaling must be positive");
  };
  auto& a = keys["adapt"];
  a["lambda"] = [&](const Reader& r) {
    c.adapt.lambda = r.real();
    if (!(c.adapt.lambda >= 0.0 && c.adapt.lambda <= 1.0)) r.fail("lambda out of [0,1]");
  };
  a["tolerance"] = [&](const Reader& r) {
    c.adapt.tolerance = r.real();
    if (!(c.adapt.tolerance > 0.0)) r.fail("tolerance must be positive");
  };
  a["max_iterations"] = [&](const Reader& r) {
    c.adapt.max_iterations = r.integer();
    if (c.adapt.max_iterations < 1) r.fail("max_iterations must be at least 1");
  };
  a["estimator"] = [&](const Reader& r) { c.adapt.estimator = r.choice(estimator_names()); };
  a["mode"] = [&](const Reader& r) {
    c.adapt.mode = r.choice({"energy", "goal"}) == "goal" ? AdaptMode::goal : AdaptMode::energy;
  };
  auto& s = keys["study"];
  s["mode"] = [&](const Reader& r) {
    c.study.mode = r.choice({"uniform", "adaptive"}) == "adaptive" ? StudyMode::adaptive : StudyMode::uniform;
  };
  s["iterations"] = [&](const Reader& r) {
    c.study.iterations = r.integer();
    if (c.study.iterations < 3) r.fail("iterations must be at least 3");
  };
  s["skip"] = [&](const Reader& r) {
    c.study.skip = r.integer();
    if (c.study.skip < 0) r.fail("skip must be nonnegative");
  };

  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> sections_seen;
  std::map<std::string, std::set<std::string>> seen;
  int line = 0;
  bool problem_set = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = trim(raw);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(line, "malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty() || !keys.count(section)) throw ConfigError(line, "unknown section [" + section + "]");
      if (!sections_seen.insert(section).second) throw ConfigError(line, "duplicate section [" + section + "]");
      if (section == "goal") has_goal = true;
      if (section == "adapt") c.has_adapt = true;
      if (section == "study") c.has_study = true;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key=value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    const auto& table = keys.at(section);
    const auto h = table.find(key);
    if (h == table.end())
      throw ConfigError(line, "unknown key '" + key + "'" + (section.empty() ? "" : " in section [" + section + "]"));
    if (!seen[section].insert(key).second) throw ConfigError(line, "duplicate key '" + key + "'");
    h->second(Reader(line, key, value));
    if (section.empty() && key == "problem") problem_set = true;
  }
  if (!problem_set) throw ConfigError(0, "missing required key 'problem'");
  if (has_goal) c.goal = goal;
  if (c.problem == "custom" && !sections_seen.count("custom")) throw ConfigError(0, "problem=custom needs a [custom] section");
  if (c.problem != "custom" && sections_seen.count("custom")) throw ConfigError(0, "[custom] is only valid with problem=custom");
  if (c.estimators.empty() && !c.goal && !c.has_adapt && !c.has_study)
    throw ConfigError(0, "no pipeline requested: set estimators or add a [goal], [adapt] or [study] section");
  c.adapt.options = c.options;
  c.adapt.timing = c.timing;
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace verifem
