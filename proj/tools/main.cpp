#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "snakesim/config.hpp"
#include "snakesim/errors.hpp"
#include "snakesim/experiments.hpp"
#include "snakesim/io.hpp"
#include "snakesim/parallel.hpp"

namespace fs = std::filesystem;
using namespace snakesim;

namespace {

struct Options {
  std::string config;
  std::vector<int> n;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
  bool no_out = false;
  unsigned workers = 0;
  int verbose = 0;
  std::string run_id;
};

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

ExperimentSpec build_spec(const std::string& id, const Options& o) {
  ExperimentSpec spec = default_spec(id);
  if (!o.config.empty()) spec = load_spec(o.config, spec);
  if (!o.n.empty()) spec.n_list = o.n;
  if (o.replicates > 0) spec.replicates = o.replicates;
  if (o.seed_set) spec.seed = o.seed;
  if (o.workers > 0) spec.workers = o.workers;
  return spec;
}

void print_bundle(const ResultBundle& b, int verbose) {
  for (const auto& c : b.checks) {
    std::printf("%-6s %s/%s (%.2fs, %zu failed replicates)\n", c.passed() ? "PASS" : "FAIL", b.spec.id.c_str(),
                c.name.c_str(), c.seconds, c.failed_replicates);
    for (const auto& s : c.stats) {
      if (verbose == 0 && s.verdict != Verdict::fail) continue;
      std::printf("    [%s] %s = %.6g (se %.3g, target %.6g; %s)\n", to_string(s.verdict).c_str(), s.name.c_str(),
                  s.estimate, s.stderr_, s.target, s.tolerance.c_str());
    }
    if (verbose > 1)
      for (const auto& n : c.notes) std::printf("    note: %s\n", n.c_str());
  }
}

void write_manifest(const ResultBundle& b, const std::string& ini, const fs::path& dir) {
  nlohmann::ordered_json m;
  m["experiment"] = b.spec.id;
  m["config_hash"] = fnv1a_hex(ini);
  m["seed"] = b.spec.seed;
  m["replicates"] = b.spec.replicates;
  m["workers"] = b.spec.workers == 0 ? default_workers() : b.spec.workers;
  m["version"] = SNAKESIM_VERSION;
#if defined(__clang__)
  m["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  m["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  m["cxx_standard"] = __cplusplus;
  m["wall_seconds"] = b.wall_seconds;
  auto& secs = m["check_seconds"] = nlohmann::ordered_json::object();
  for (const auto& c : b.checks) secs[c.name] = c.seconds;
  m["passed"] = b.passed();
  std::ofstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  f << m.dump(2) << "\n";
}

int run_one(const std::string& id, const Options& o) {
  ExperimentSpec spec = build_spec(id, o);
  fs::path dir;
  if (!o.no_out) {
    dir = fs::path(o.out) / id / (o.run_id.empty() ? timestamp() : o.run_id);
    spec.out_dir = dir.string();
  }
  if (o.verbose > 0) std::fprintf(stderr, "running %s (seed %llu, %zu replicates)\n", id.c_str(),
                                  static_cast<unsigned long long>(spec.seed), spec.replicates);
  const ResultBundle b = run_experiment(spec);
  if (!o.no_out) {
    const std::string ini = spec_to_ini(spec);
    std::ofstream(dir / "config.ini") << ini;
    write_manifest(b, ini, dir);
  }
  print_bundle(b, o.verbose);
  if (!o.no_out) std::printf("results: %s\n", dir.string().c_str());
  return b.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walks in random environment, snake representation and diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SNAKESIM_VERSION);
  Options o;
  app.add_option("--config", o.config, "INI experiment file")->check(CLI::ExistingFile);
  app.add_option("--n", o.n, "Scaling parameters n (overrides the experiment's list)")->delimiter(',');
  app.add_option("--replicates", o.replicates, "Monte Carlo replicates")->check(CLI::PositiveNumber);
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; },
                                         "Master seed");
  app.add_option("--out", o.out, "Output root; results go to <out>/<experiment>/<run-id>")->capture_default_str();
  app.add_flag("--no-out", o.no_out, "Do not write result files");
  app.add_option("--workers", o.workers, "Worker threads (default: SNAKESIM_WORKERS or all cores)");
  app.add_flag("-v,--verbose", o.verbose, "Print every statistic (-vv adds notes)");
  app.add_option("--run-id", o.run_id, "Output subdirectory name instead of a timestamp");
  for (auto* opt : app.get_options()) opt->configurable(false);

  std::vector<std::string> selected;
  for (const auto& id : experiment_ids()) {
    auto* sub = app.add_subcommand(id, "Run the " + id + " experiment");
    sub->callback([&selected, id] { selected = {id}; });
    sub->fallthrough();
  }
  auto* all = app.add_subcommand("all", "Run every experiment in turn");
  all->callback([&selected] { selected = experiment_ids(); });
  all->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  int code = 0;
  try {
    for (const auto& id : selected) code = std::max(code, run_one(id, o));
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return code;
}
