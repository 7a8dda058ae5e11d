#include "snakesim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "snakesim/errors.hpp"

namespace snakesim {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError(field, "expected a number, got '" + v + "'");
}

long long to_integer(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError(field, "expected an integer, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FieldMode parse_mode(const std::string& s) {
  if (s == "random") return FieldMode::random;
  if (s == "deterministic") return FieldMode::deterministic;
  if (s == "smooth_gaussian" || s == "smooth") return FieldMode::smooth_gaussian;
  throw ValidationError("environment.mode", "unknown mode '" + s + "'");
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"seed", "replicates", "workers", "n"}},
      {"environment",
       {"n", "nu", "dim", "kernel", "variance", "length_scale", "mode", "field", "spectral_order", "xi_bound",
        "grid_origin", "grid_spacing", "grid_points"}},
      {"horizon", {"delta", "t", "c0", "r", "K1"}},
      {"test_functions", {"phi"}},
      {"params", {}},
  };
  return s;
}

}  // namespace

CovarianceKernel parse_kernel(const std::string& name, double variance, double length_scale) {
  if (name == "zero") return ZeroKernel{};
  if (name == "constant") return ConstantKernel{variance};
  if (name == "sqexp" || name == "squared_exponential") return SquaredExponentialKernel{variance, length_scale};
  throw ValidationError("environment.kernel", "unknown kernel '" + name + "'");
}

ExperimentSpec read_spec(std::istream& in, ExperimentSpec spec) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("file", e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ValidationError(section, "unknown section");
    if (section == "params") continue;
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) throw ValidationError(section + "." + key, "unknown key");
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };

  if (auto v = get("experiment.seed")) spec.seed = static_cast<std::uint64_t>(to_integer("experiment.seed", *v));
  if (auto v = get("experiment.replicates")) {
    const auto r = to_integer("experiment.replicates", *v);
    if (r < 1) throw ValidationError("experiment.replicates", "must be >= 1");
    spec.replicates = static_cast<std::size_t>(r);
  }
  if (auto v = get("experiment.workers")) spec.workers = static_cast<unsigned>(to_integer("experiment.workers", *v));
  if (auto v = get("experiment.n")) {
    spec.n_list.clear();
    for (const auto& s : split_list(*v)) spec.n_list.push_back(static_cast<int>(to_integer("experiment.n", s)));
  }

  EnvironmentConfig& env = spec.environment;
  if (auto v = get("environment.n")) env.n = static_cast<int>(to_integer("environment.n", *v));
  if (auto v = get("environment.nu")) env.nu = to_double("environment.nu", *v);
  if (auto v = get("environment.dim")) env.dim = static_cast<int>(to_integer("environment.dim", *v));
  {
    double variance = 1.0, length = 1.0;
    std::string kname = kernel_name(env.kernel);
    if (const auto* c = std::get_if<ConstantKernel>(&env.kernel)) variance = c->variance;
    if (const auto* s = std::get_if<SquaredExponentialKernel>(&env.kernel)) {
      variance = s->variance;
      length = s->length_scale;
    }
    bool touched = false;
    if (auto v = get("environment.kernel")) kname = *v, touched = true;
    if (auto v = get("environment.variance")) variance = to_double("environment.variance", *v), touched = true;
    if (auto v = get("environment.length_scale"))
      length = to_double("environment.length_scale", *v), touched = true;
    if (touched) env.kernel = parse_kernel(kname, variance, length);
  }
  if (auto v = get("environment.mode")) env.mode = parse_mode(*v);
  if (auto v = get("environment.field")) {
    try {
      env.deterministic = deterministic_by_name(*v);
    } catch (const std::exception& e) {
      throw ValidationError("environment.field", e.what());
    }
  }
  if (env.mode == FieldMode::deterministic && !env.deterministic)
    throw ValidationError("environment.field", "deterministic mode needs a field name");
  if (auto v = get("environment.spectral_order"))
    env.spectral_order = static_cast<int>(to_integer("environment.spectral_order", *v));
  if (auto v = get("environment.xi_bound")) env.xi_bound_override = to_double("environment.xi_bound", *v);
  if (auto v = get("environment.grid_origin")) env.grid.origin = to_double("environment.grid_origin", *v);
  if (auto v = get("environment.grid_spacing")) env.grid.spacing = to_double("environment.grid_spacing", *v);
  if (auto v = get("environment.grid_points"))
    env.grid.points_per_axis = static_cast<int>(to_integer("environment.grid_points", *v));
  env.grid.dim = env.dim;

  if (auto v = get("horizon.delta")) spec.delta = to_double("horizon.delta", *v);
  if (auto v = get("horizon.t")) spec.t = to_double("horizon.t", *v);
  if (auto v = get("horizon.c0")) spec.c0 = to_double("horizon.c0", *v);
  if (auto v = get("horizon.r")) spec.r = to_double("horizon.r", *v);
  if (auto v = get("horizon.K1")) spec.K1 = to_double("horizon.K1", *v);

  if (auto v = get("test_functions.phi")) spec.test_functions = split_list(*v);

  if (auto p = tree.get_child_optional("params"))
    for (const auto& [key, val] : *p) spec.params[key] = trim(val.data());
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream f(path);
  if (!f) throw ValidationError("config", "cannot open " + path.string());
  return read_spec(f, std::move(base));
}

std::string spec_to_ini(const ExperimentSpec& s) {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "seed = " << s.seed << "\n";
  o << "replicates = " << s.replicates << "\n";
  o << "workers = " << s.workers << "\n";
  o << "n = ";
  for (std::size_t i = 0; i < s.n_list.size(); ++i) o << (i ? ", " : "") << s.n_list[i];
  o << "\n\n[environment]\n";
  const EnvironmentConfig& e = s.environment;
  o << "n = " << e.n << "\n";
  o << "nu = " << fmt(e.nu) << "\n";
  o << "dim = " << e.dim << "\n";
  o << "kernel = " << (std::holds_alternative<SquaredExponentialKernel>(e.kernel) ? "sqexp" : kernel_name(e.kernel))
    << "\n";
  if (const auto* c = std::get_if<ConstantKernel>(&e.kernel)) o << "variance = " << fmt(c->variance) << "\n";
  if (const auto* q = std::get_if<SquaredExponentialKernel>(&e.kernel)) {
    o << "variance = " << fmt(q->variance) << "\n";
    o << "length_scale = " << fmt(q->length_scale) << "\n";
  }
  o << "mode = " << to_string(e.mode) << "\n";
  if (e.deterministic) o << "field = " << e.deterministic->name << "\n";
  o << "spectral_order = " << e.spectral_order << "\n";
  if (e.xi_bound_override) o << "xi_bound = " << fmt(*e.xi_bound_override) << "\n";
  o << "grid_origin = " << fmt(e.grid.origin) << "\n";
  o << "grid_spacing = " << fmt(e.grid.spacing) << "\n";
  o << "grid_points = " << e.grid.points_per_axis << "\n";
  o << "\n[horizon]\n";
  o << "delta = " << fmt(s.delta) << "\n";
  o << "t = " << fmt(s.t) << "\n";
  o << "c0 = " << fmt(s.c0) << "\n";
  o << "r = " << fmt(s.r) << "\n";
  o << "K1 = " << fmt(s.K1) << "\n";
  o << "\n[test_functions]\nphi = ";
  for (std::size_t i = 0; i < s.test_functions.size(); ++i) o << (i ? ", " : "") << s.test_functions[i];
  o << "\n";
  if (!s.params.empty()) {
    o << "\n[params]\n";
    for (const auto& [k, v] : s.params) o << k << " = " << v << "\n";
  }
  return o.str();
}

}  // namespace snakesim
