// cdna: command line front end for the trading simulator.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cdna/dynamics.hpp"
#include "cdna/harness.hpp"
#include "cdna/outcome_io.hpp"
#include "cdna/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace cdna;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNotConverged = 2;

struct Options {
  std::string config;
  std::vector<std::pair<std::string, std::string>> flags;  // key, value in apply order
  std::vector<std::string> settings;                        // --set key=value
  std::string out;
  std::string events;
  std::string scenario;
  std::string scheme = "distributed";
  std::vector<int> sweep_pus;
  bool strict = false;
};

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  for (const auto& [k, v] : o.flags) apply_setting(cfg, k, v);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.strict) cfg.strict = true;
  if (!o.events.empty()) cfg.events = o.events;
  cfg.validate();
  return cfg;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void print_records(const std::vector<MetricsRecord>& records) {
  std::printf("%-12s %3s %10s %10s %10s %10s %10s %9s %11s %6s %5s\n", "scheme", "M", "u_su", "u_pu", "u_so", "u_po",
              "total_q", "price", "cpu_s", "stable", "fail");
  for (const auto& r : records)
    std::printf("%-12s %3d %10.4f %10.4f %10.4f %10.4f %10.4f %9.4f %11.6f %6.2f %5d\n", r.scheme.c_str(), r.m,
                r.u_su, r.u_pu, r.u_so, r.u_po, r.total_q, r.mean_price, r.cpu_time, r.stable, r.failures);
}

int cmd_run(const Options& o) {
  auto cfg = build_config(o);
  std::vector<int> ms = o.sweep_pus.empty() ? std::vector<int>{cfg.n_pu} : o.sweep_pus;
  std::vector<MetricsRecord> all;
  int failures = 0;
  for (int m : ms) {
    if (m < 1) throw ConfigError("--sweep-pus values must be >= 1");
    cfg.n_pu = m;
    const auto res = run_comparison(cfg);
    for (const auto& r : res.records) failures += r.failures;
    all.insert(all.end(), res.records.begin(), res.records.end());
  }
  print_records(all);
  if (!o.out.empty()) {
    ensure_dir(o.out);
    emit_plot_data(all, join(o.out, "metrics.csv"));
  } else {
    write_plot_data(std::cout, all);
  }
  if (failures > 0) std::fprintf(stderr, "%d rep(s) did not converge or failed\n", failures);
  return cfg.strict && failures > 0 ? kExitNotConverged : kExitOk;
}

NetworkScenario scenario_for(const Options& o, const ExperimentConfig& cfg) {
  if (!o.scenario.empty()) {
    try {
      return load_scenario(o.scenario);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  Rng rng(split_seed(cfg.seed, 0));
  return generate_scenario(cfg, rng);
}

int cmd_scheme(const Options& o) {
  const auto cfg = build_config(o);
  if (std::find(kAllSchemes.begin(), kAllSchemes.end(), o.scheme) == kAllSchemes.end()) {
    throw ConfigError("unknown scheme: " + o.scheme);
  }
  const auto s = scenario_for(o, cfg);
  const auto trust = scenario_trust(s, cfg.trust);
  Rng rng(split_seed(cfg.seed, 1));
  const auto out = run_scheme(o.scheme, s, trust, cfg, rng);
  if (!o.out.empty()) {
    ensure_dir(o.out);
    save_outcome_csv(join(o.out, "outcome_" + o.scheme + ".csv"), out, s);
  } else {
    write_outcome_csv(std::cout, out, s);
  }
  std::fprintf(stderr, "%s: %zu links, total_q %.4f, price %.4f, %.6f s%s\n", o.scheme.c_str(),
               out.topology.triples.size(), out.total_q, out.price, out.wall_time,
               out.converged ? "" : " (not converged)");
  return cfg.strict && !out.converged ? kExitNotConverged : kExitOk;
}

int cmd_dynamic(const Options& o) {
  const auto cfg = build_config(o);
  const auto s = scenario_for(o, cfg);
  std::vector<DynamicsEvent> events;
  if (!cfg.events.empty()) {
    try {
      events = load_events(cfg.events);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else {
    Rng rng(split_seed(cfg.seed, 2));
    events = reconfiguration_events(cfg, s, rng);
  }
  const auto trust = scenario_trust(s, cfg.trust);
  std::vector<DynamicStep> steps;
  try {
    steps = run_dynamic(s, events, trust, cfg.shares, cfg.matching, cfg.trust);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  bool all_stable = true;
  for (const auto& st : steps) all_stable = all_stable && st.outcome.stable.value_or(false) && st.feasible;
  if (!o.out.empty()) {
    ensure_dir(o.out);
    std::ofstream f(join(o.out, "dynamic.csv"));
    if (!f) throw std::runtime_error("cannot write dynamic.csv");
    write_dynamic_csv(f, steps);
    std::ofstream ev(join(o.out, "events.txt"));
    write_events(ev, events);
    for (std::size_t k = 0; k < steps.size(); ++k)
      save_outcome_csv(join(o.out, "step_" + std::to_string(k) + ".csv"), steps[k].outcome, steps[k].scenario);
  } else {
    write_dynamic_csv(std::cout, steps);
  }
  return cfg.strict && !all_stable ? kExitNotConverged : kExitOk;
}

int cmd_gen(const Options& o) {
  const auto cfg = build_config(o);
  Rng rng(split_seed(cfg.seed, 0));
  const auto s = generate_scenario(cfg, rng);
  if (o.out.empty()) {
    write_scenario(std::cout, s);
  } else {
    const fs::path p(o.out);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    save_scenario(o.out, s);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data and spectrum trading simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        name, [&o, key](const std::string& v) { o.flags.emplace_back(key, v); }, help);
  };
  app.add_option("--config", o.config, "key=value config file")->check(CLI::ExistingFile);
  flag("--sus", "sus", "number of SUs");
  flag("--pus", "pus", "number of PUs");
  flag("--channels", "channels", "number of channels");
  flag("--reps", "reps", "Monte Carlo repetitions");
  flag("--seed", "seed", "master seed");
  flag("--eta", "eta", "PU revenue share");
  flag("--sigma", "sigma", "SU revenue share");
  flag("--schemes", "schemes", "comma separated subset of centralized,hybrid,distributed,mdm,random");
  flag("--threads", "threads", "worker threads (0 = all cores)");
  app.add_option("--set", o.settings, "extra config setting key=value (repeatable)");
  app.add_option("--out", o.out, "output directory (gen: output file)");
  app.add_option("--events", o.events, "event trace for the dynamic replay");
  app.add_flag("--strict", o.strict, "exit with status 2 when any run does not converge");

  auto* run = app.add_subcommand("run", "compare the schemes over seeded repetitions");
  run->add_option("--sweep-pus", o.sweep_pus, "repeat the comparison for each PU count")->delimiter(',');
  auto* scheme = app.add_subcommand("scheme", "run one scheme on one scenario");
  scheme->add_option("--scenario", o.scenario, "scenario file (default: generated from the config)");
  scheme->add_option("--scheme", o.scheme, "scheme name")->capture_default_str();
  auto* dynamic = app.add_subcommand("dynamic", "replay network events through the distributed scheme");
  dynamic->add_option("--scenario", o.scenario, "initial scenario file (default: generated)");
  app.add_subcommand("gen", "write a generated scenario file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o);
    if (*scheme) return cmd_scheme(o);
    if (*dynamic) return cmd_dynamic(o);
    return cmd_gen(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}
