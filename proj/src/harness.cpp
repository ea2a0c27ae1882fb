#include "cdna/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace cdna {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kPuReserve = 1e-6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(out)) throw ConfigError(key + ": not a number: " + v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": not an integer: " + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": not a boolean: " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double sellable(const Node& pu) { return std::max(0.0, pu.q0 - kPuReserve); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool conflicts_any(const LinkModel& links, const Triple& t, const std::vector<Triple>& chosen) {
  for (const auto& x : chosen)
    if (links.conflicts(t, x)) return true;
  return false;
}

void add_baseline_link(SchemeOutcome& out, const NetworkScenario& s, const Triple& t, double aq, double p0) {
  const double a = s.a(t.su, t.pu, t.channel);
  out.topology.add(t, aq / a, p0);
  out.u_su[t.su] = std::log(s.sus[t.su].q0 + aq) - p0 * aq;
  out.u_pu[t.pu] += p0 * aq;
  out.total_q += aq;
}

}  // namespace

// --- config ----------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (n_su < 1 || n_pu < 1 || n_channels < 1) throw ConfigError("node and channel counts must be >= 1");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("area must be positive");
  if (!(sinr_min_db <= sinr_max_db)) throw ConfigError("sinr range is empty");
  if (!(tau_lo >= 0.0) || !(tau_lo < tau_hi)) throw ConfigError("tau range must satisfy 0 <= lo < hi");
  if (!(q0 > 0.0) || !(plan_price > 0.0) || !(energy_cost >= 0.0) || !(volume_scale > 0.0)) {
    throw ConfigError("q0, plan_price and volume_scale must be positive, energy_cost >= 0");
  }
  if (!(trust >= 0.0 && trust <= 1.0)) throw ConfigError("trust must lie in [0,1]");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (schemes.empty()) throw ConfigError("no schemes selected");
  for (const auto& s : schemes)
    if (std::find(kAllSchemes.begin(), kAllSchemes.end(), s) == kAllSchemes.end()) {
      throw ConfigError("unknown scheme: " + s);
    }
  try {
    shares.validate();
    negotiation.validate();
    matching.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto positive_int = [&](int& dst) {
    const auto x = to_int(key, v);
    if (x < 0 || x > 1'000'000'000) throw ConfigError(key + ": out of range");
    dst = static_cast<int>(x);
  };
  if (key == "sus") positive_int(c.n_su);
  else if (key == "pus") positive_int(c.n_pu);
  else if (key == "channels") positive_int(c.n_channels);
  else if (key == "width") c.width = to_double(key, v);
  else if (key == "height") c.height = to_double(key, v);
  else if (key == "seed") {
    const auto x = to_int(key, v);
    if (x < 0) throw ConfigError("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(x);
  } else if (key == "reps") positive_int(c.reps);
  else if (key == "eta") c.shares.eta = to_double(key, v);
  else if (key == "sigma") c.shares.sigma = to_double(key, v);
  else if (key == "psi") c.shares.psi = to_double(key, v);
  else if (key == "schemes") c.schemes = split_list(v);
  else if (key == "sinr_min_db") c.sinr_min_db = to_double(key, v);
  else if (key == "sinr_max_db") c.sinr_max_db = to_double(key, v);
  else if (key == "tau_min") c.tau_lo = to_double(key, v);
  else if (key == "tau_max") c.tau_hi = to_double(key, v);
  else if (key == "q0") c.q0 = to_double(key, v);
  else if (key == "plan_price") {
    c.plan_price = to_double(key, v);
    c.negotiation.plan_price_default = c.plan_price;
  } else if (key == "energy_cost") c.energy_cost = to_double(key, v);
  else if (key == "volume_scale") c.volume_scale = to_double(key, v);
  else if (key == "trust") c.trust = to_double(key, v);
  else if (key == "threads") positive_int(c.threads);
  else if (key == "events") c.events = v;
  else if (key == "strict") c.strict = to_bool(key, v);
  else if (key == "chi") c.negotiation.chi = c.matching.chi = to_double(key, v);
  else if (key == "chi_prime") c.negotiation.chi_prime = to_double(key, v);
  else if (key == "dp") c.negotiation.dp = to_double(key, v);
  else if (key == "dpi") c.negotiation.dpi = to_double(key, v);
  else if (key == "deps") c.negotiation.deps = to_double(key, v);
  else if (key == "p0") c.negotiation.p0 = c.matching.p0 = to_double(key, v);
  else if (key == "max_iters") positive_int(c.negotiation.max_iters);
  else if (key == "adaptive_steps") c.negotiation.adaptive_steps = to_bool(key, v);
  else if (key == "per_link_prices") c.negotiation.per_link_prices = to_bool(key, v);
  else if (key == "price_tol") c.matching.price_tol = to_double(key, v);
  else if (key == "max_rounds") positive_int(c.matching.max_rounds);
  else if (key == "rate_policy") {
    if (v == "jacobian") c.matching.rate = RatePolicy::Jacobian;
    else if (v == "half_bound") c.matching.rate = RatePolicy::HalfPublishedBound;
    else throw ConfigError("rate_policy must be jacobian or half_bound");
  } else if (key == "pref_limit") {
    int n = 0;
    positive_int(n);
    c.matching.pref_limit = n;
  } else if (key == "dpsi") c.matching.dpsi = to_double(key, v);
  else throw ConfigError("unknown key: " + key);
}

ExperimentConfig parse_config(std::istream& is, ExperimentConfig c) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  return parse_config(f, std::move(base));
}

// --- scenarios -------------------------------------------------------------

double sinr_db_to_cmin(double sinr_db) { return std::log2(1.0 + std::pow(10.0, sinr_db / 10.0)); }

NetworkScenario generate_scenario(const ExperimentConfig& cfg, Rng& rng) {
  NetworkScenario s;
  s.width = cfg.width;
  s.height = cfg.height;
  s.channels = cfg.n_channels;
  s.volume_scale = cfg.volume_scale;
  for (int i = 0; i < cfg.n_su; ++i) {
    Node n;
    n.id = i;
    n.kind = NodeKind::kSU;
    n.position = {uniform(rng, 0.0, cfg.width), uniform(rng, 0.0, cfg.height)};
    n.q0 = cfg.q0;
    n.c_min = sinr_db_to_cmin(uniform(rng, cfg.sinr_min_db, cfg.sinr_max_db));
    n.tau_min = uniform_open_closed(rng, cfg.tau_lo, cfg.tau_hi);
    s.sus.push_back(n);
  }
  for (int j = 0; j < cfg.n_pu; ++j) {
    Node n;
    n.id = j;
    n.kind = NodeKind::kPU;
    n.position = {uniform(rng, 0.0, cfg.width), uniform(rng, 0.0, cfg.height)};
    n.q0 = cfg.q0;
    n.plan_price = cfg.plan_price;
    n.energy_cost = cfg.energy_cost;
    s.pus.push_back(n);
  }
  s.availability = AvailabilityMap(cfg.n_su, cfg.n_pu, cfg.n_channels);
  for (int i = 0; i < cfg.n_su; ++i)
    for (int j = 0; j < cfg.n_pu; ++j)
      for (int b = 0; b < cfg.n_channels; ++b) s.availability.set(i, j, b, uniform_open_closed(rng, 0.5, 1.0));
  s.validate();
  return s;
}

std::vector<DynamicsEvent> reconfiguration_events(const ExperimentConfig& cfg, const NetworkScenario& s, Rng& rng) {
  int next_su = 0, next_pu = 0;
  for (const auto& nd : s.sus) next_su = std::max(next_su, nd.id + 1);
  for (const auto& nd : s.pus) next_pu = std::max(next_pu, nd.id + 1);
  const int last = s.channels - 1;
  std::vector<DynamicsEvent> ev(5);
  ev[0].kind = EventKind::kSuDepart;
  ev[0].id = s.sus[uniform_int(rng, s.n())].id;
  ev[1].kind = EventKind::kChannelOff;
  ev[1].id = last;

  ev[2].kind = EventKind::kPuArrive;
  ev[2].id = next_pu;
  ev[2].node.id = next_pu;
  ev[2].node.kind = NodeKind::kPU;
  ev[2].node.position = {uniform(rng, 0.0, cfg.width), uniform(rng, 0.0, cfg.height)};
  ev[2].node.q0 = cfg.q0;
  ev[2].node.plan_price = cfg.plan_price;
  ev[2].node.energy_cost = cfg.energy_cost;
  ev[2].a = uniform_open_closed(rng, 0.5, 1.0);

  ev[3].kind = EventKind::kSuArrive;
  ev[3].id = next_su;
  ev[3].node.id = next_su;
  ev[3].node.kind = NodeKind::kSU;
  ev[3].node.position = {uniform(rng, 0.0, cfg.width), uniform(rng, 0.0, cfg.height)};
  ev[3].node.q0 = cfg.q0;
  ev[3].node.c_min = sinr_db_to_cmin(uniform(rng, cfg.sinr_min_db, cfg.sinr_max_db));
  ev[3].node.tau_min = uniform_open_closed(rng, cfg.tau_lo, cfg.tau_hi);
  ev[3].a = uniform_open_closed(rng, 0.5, 1.0);

  ev[4].kind = EventKind::kChannelOn;
  ev[4].id = last;
  for (int k = 0; k < 5; ++k) ev[k].time_index = k + 1;
  return ev;
}

TrustState scenario_trust(const NetworkScenario& s, double rho) { return TrustState::uniform(s.n(), s.m(), rho); }

// --- baselines -------------------------------------------------------------

SchemeOutcome baseline_random(const NetworkScenario& s, Rng& rng, double p0) {
  const LinkModel links(s);
  SchemeOutcome out;
  out.scheme = "random";
  out.price = p0;
  out.u_su.assign(s.n(), 0.0);
  out.u_pu.assign(s.m(), 0.0);
  std::vector<int> order(s.n());
  for (int i = 0; i < s.n(); ++i) order[i] = i;
  for (int k = s.n() - 1; k > 0; --k) std::swap(order[k], order[uniform_int(rng, k + 1)]);
  std::vector<double> left(s.m());
  for (int j = 0; j < s.m(); ++j) left[j] = sellable(s.pus[j]);
  std::vector<Triple> chosen;
  for (int i : order) {
    const double qm = s.q_min(i);
    std::vector<Triple> options;
    for (int j = 0; j < s.m(); ++j)
      for (int b = 0; b < s.channels; ++b) {
        const Triple t{i, j, b};
        if (links.qos_feasible(i, j, b) && qm <= left[j] && !conflicts_any(links, t, chosen)) options.push_back(t);
      }
    if (options.empty()) continue;
    const Triple t = options[uniform_int(rng, static_cast<int>(options.size()))];
    chosen.push_back(t);
    left[t.pu] -= qm;
    add_baseline_link(out, s, t, qm, p0);
  }
  out.agreed_q = out.total_q;
  return out;
}

SchemeOutcome baseline_mdm(const NetworkScenario& s, double p0) {
  const LinkModel links(s);
  SchemeOutcome out;
  out.scheme = "mdm";
  out.price = p0;
  out.u_su.assign(s.n(), 0.0);
  out.u_pu.assign(s.m(), 0.0);
  std::vector<double> left(s.m());
  for (int j = 0; j < s.m(); ++j) left[j] = sellable(s.pus[j]);
  std::vector<Triple> chosen;
  for (int i = 0; i < s.n(); ++i) {
    std::vector<int> pus(s.m());
    for (int j = 0; j < s.m(); ++j) pus[j] = j;
    std::stable_sort(pus.begin(), pus.end(),
                     [&](int x, int y) { return s.su_pu_distance(i, x) < s.su_pu_distance(i, y); });
    bool done = false;
    for (int j : pus) {
      for (int b = 0; b < s.channels && !done; ++b) {
        const Triple t{i, j, b};
        if (!links.qos_feasible(i, j, b) || conflicts_any(links, t, chosen)) continue;
        const double a = s.a(i, j, b);
        const auto q = inner_optimal_volume(1.0, p0, a, s.sus[i].q0, s.q_min(i), left[j]);
        if (!q) continue;
        chosen.push_back(t);
        left[j] -= a * *q;
        add_baseline_link(out, s, t, a * *q, p0);
        done = true;
      }
      if (done) break;
    }
  }
  out.agreed_q = out.total_q;
  return out;
}

SchemeOutcome run_scheme(const std::string& scheme, const NetworkScenario& s, const TrustState& trust,
                         const ExperimentConfig& cfg, Rng& rng) {
  if (scheme == "centralized") return run_centralized(s, trust, cfg.shares, cfg.negotiation);
  if (scheme == "hybrid") return run_hybrid(s, trust, cfg.shares, cfg.negotiation);
  if (scheme == "distributed") return run_matching(s, trust, cfg.shares, cfg.matching);
  const auto t0 = Clock::now();
  SchemeOutcome out;
  if (scheme == "mdm") {
    out = baseline_mdm(s, cfg.negotiation.p0);
  } else if (scheme == "random") {
    out = baseline_random(s, rng, cfg.negotiation.p0);
  } else {
    throw ConfigError("unknown scheme: " + scheme);
  }
  out.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

// --- comparison ------------------------------------------------------------

ComparisonResult run_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n_schemes = static_cast<int>(cfg.schemes.size());
  std::vector<RepResult> results(static_cast<std::size_t>(cfg.reps) * n_schemes);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < cfg.reps; rep = next++) {
      Rng rng(split_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
      const auto s = generate_scenario(cfg, rng);
      const auto trust = scenario_trust(s, cfg.trust);
      for (int k = 0; k < n_schemes; ++k) {
        auto& r = results[static_cast<std::size_t>(rep) * n_schemes + k];
        r.rep = rep;
        r.scheme = cfg.schemes[k];
        Rng scheme_rng(split_seed(split_seed(cfg.seed, static_cast<std::uint64_t>(rep)), k));
        try {
          r.outcome = run_scheme(r.scheme, s, trust, cfg, scheme_rng);
          r.failed = !r.outcome.converged;
        } catch (const std::exception& e) {
          r.failed = true;
          r.error = e.what();
        }
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, cfg.reps);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ComparisonResult out;
  for (int k = 0; k < n_schemes; ++k) {
    MetricsRecord m;
    m.scheme = cfg.schemes[k];
    m.m = cfg.n_pu;
    double stable = 0.0, eff = 0.0;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const auto& r = results[static_cast<std::size_t>(rep) * n_schemes + k];
      if (r.failed) {
        ++m.failures;
        continue;
      }
      const auto& o = r.outcome;
      ++m.reps;
      for (double u : o.u_su) m.u_su += u;
      for (double u : o.u_pu) m.u_pu += u;
      m.u_so += o.u_so;
      m.u_po += o.u_po;
      m.total_q += o.total_q;
      m.mean_price += o.price;
      m.cpu_time += o.wall_time;
      eff += trading_efficiency(o);
      stable += o.stable.value_or(true) ? 1.0 : 0.0;
    }
    if (m.reps > 0) {
      const double n = m.reps;
      m.u_su /= n;
      m.u_pu /= n;
      m.u_so /= n;
      m.u_po /= n;
      m.total_q /= n;
      m.mean_price /= n;
      m.cpu_time /= n;
      m.efficiency = eff / n;
      m.stable = stable / n;
    } else {
      m.stable = 0.0;
    }
    out.records.push_back(m);
  }
  out.reps = std::move(results);
  return out;
}

// --- plot data -------------------------------------------------------------

void write_plot_data(std::ostream& os, const std::vector<MetricsRecord>& records) {
  os << "scheme,M,metric,value\n";
  for (const auto& r : records) {
    const std::pair<const char*, double> rows[] = {
        {"u_su", r.u_su},         {"u_pu", r.u_pu},         {"u_so", r.u_so},
        {"u_po", r.u_po},         {"total_q", r.total_q},   {"mean_price", r.mean_price},
        {"cpu_time", r.cpu_time}, {"efficiency", r.efficiency}, {"stable", r.stable},
        {"reps", static_cast<double>(r.reps)}, {"failures", static_cast<double>(r.failures)}};
    for (const auto& [name, v] : rows) os << r.scheme << ',' << r.m << ',' << name << ',' << fmt(v) << '\n';
  }
}

std::vector<MetricsRecord> read_plot_data(std::istream& is) {
  std::vector<MetricsRecord> out;
  std::string line;
  if (!std::getline(is, line) || trim(line) != "scheme,M,metric,value") throw ConfigError("plot data: bad header");
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string scheme, m, metric, value;
    if (!std::getline(ss, scheme, ',') || !std::getline(ss, m, ',') || !std::getline(ss, metric, ',') ||
        !std::getline(ss, value)) {
      throw ConfigError("plot data: malformed row: " + line);
    }
    const int mm = static_cast<int>(to_int("M", m));
    if (out.empty() || out.back().scheme != scheme || out.back().m != mm) {
      MetricsRecord r;
      r.scheme = scheme;
      r.m = mm;
      out.push_back(r);
    }
    auto& r = out.back();
    const double v = to_double(metric, value);
    if (metric == "u_su") r.u_su = v;
    else if (metric == "u_pu") r.u_pu = v;
    else if (metric == "u_so") r.u_so = v;
    else if (metric == "u_po") r.u_po = v;
    else if (metric == "total_q") r.total_q = v;
    else if (metric == "mean_price") r.mean_price = v;
    else if (metric == "cpu_time") r.cpu_time = v;
    else if (metric == "efficiency") r.efficiency = v;
    else if (metric == "stable") r.stable = v;
    else if (metric == "reps") r.reps = static_cast<int>(v);
    else if (metric == "failures") r.failures = static_cast<int>(v);
    else throw ConfigError("plot data: unknown metric " + metric);
  }
  return out;
}

void emit_plot_data(const std::vector<MetricsRecord>& records, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_plot_data(f, records);
  if (!f) throw std::runtime_error("write failed: " + path);
}

// --- trust and price -------------------------------------------------------

TrustPricePoint trust_price_point(const ExperimentConfig& cfg, double reliable_su, double reliable_pu,
                                  std::uint64_t seed, int samples) {
  Rng rng(split_seed(seed, 0));
  const auto s = generate_scenario(cfg, rng);
  TrustSimConfig tc;
  tc.n_su = cfg.n_su;
  tc.n_pu = cfg.n_pu;
  tc.reliable_su_fraction = reliable_su;
  tc.reliable_pu_fraction = reliable_pu;
  tc.samples = samples;
  const auto sim = simulate_trust(tc, split_seed(seed, 1));
  const auto shares = RevenueShares::from_access(sim.shares, cfg.shares.psi);
  const auto prices = slot_equilibrium_prices(s, sim.state, shares, cfg.matching);
  TrustPricePoint p;
  for (const auto& [k, v] : prices) p.mean_price += v;
  p.slots = static_cast<int>(prices.size());
  if (p.slots > 0) p.mean_price /= p.slots;
  p.mean_eta = sim.mean_eta;
  p.mean_sigma = sim.mean_sigma;
  p.excluded_sus = static_cast<int>(sim.shares.excluded_sus.size());
  p.excluded_pus = static_cast<int>(sim.shares.excluded_pus.size());
  return p;
}

}  // namespace cdna
