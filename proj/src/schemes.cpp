#include "cdna/schemes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace cdna {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// The PU never sells its last unit so log(Q_oj − Q) stays finite.
constexpr double kPuReserve = 1e-6;

double pu_sellable(const Node& pu) { return std::max(0.0, pu.q0 - kPuReserve); }

}  // namespace

// --- shared types ----------------------------------------------------------

void RevenueShares::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(eta) || !unit(sigma) || !unit(psi)) throw std::invalid_argument("revenue shares must lie in [0,1]");
  for (double v : eta_pu)
    if (!unit(v)) throw std::invalid_argument("revenue shares must lie in [0,1]");
  for (double v : sigma_su)
    if (!unit(v)) throw std::invalid_argument("revenue shares must lie in [0,1]");
}

bool RevenueShares::allows(const TrustState& trust, int su, int pu) const {
  return !excluded_sus.count(su) && !excluded_pus.count(pu) && trust.admitted(su, pu);
}

RevenueShares RevenueShares::from_access(const AccessShares& a, double psi) {
  RevenueShares r;
  r.eta_pu = a.eta;
  r.sigma_su = a.sigma;
  r.excluded_sus = a.excluded_sus;
  r.excluded_pus = a.excluded_pus;
  r.psi = psi;
  return r;
}

void NegotiationConfig::validate() const {
  if (!(chi > 0.0) || !(chi_prime > 0.0) || !(dp > 0.0) || !(dpi > 0.0) || !(deps > 0.0) || !(p0 > 0.0)) {
    throw std::invalid_argument("negotiation parameters must be positive");
  }
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(alpha_share > 0.0)) throw std::invalid_argument("alpha_share must be positive");
}

double SchemeOutcome::mean_price() const {
  if (topology.price.empty()) return price;
  double sum = 0.0;
  for (const auto& [t, p] : topology.price) sum += p;
  return sum / static_cast<double>(topology.price.size());
}

double plan_price_of(const Node& pu, const NegotiationConfig& cfg) {
  return pu.plan_price > 0.0 ? pu.plan_price : cfg.plan_price_default;
}

NegotiationResult negotiate_price(const std::function<double(double)>& gap, double p0, double step, double tol,
                                  int max_iters, bool adaptive, double lo, double hi) {
  NegotiationResult r;
  double p = std::clamp(p0, lo, hi);
  int last_dir = 0;
  bool bracketed = false;  // the gap has changed sign at least once
  for (int it = 0; it < max_iters; ++it) {
    const double g = gap(p);
    r.trace.push_back(p);
    r.price = p;
    r.gap = g;
    r.iterations = it + 1;
    if (std::abs(g) <= tol) {
      r.converged = true;
      return r;
    }
    const int dir = g > 0.0 ? 1 : -1;
    if (last_dir != 0) {
      if (dir != last_dir) {
        step *= 0.5;
        bracketed = true;
      } else if (adaptive && !bracketed) {
        step *= 2.0;
      }
    }
    // A step too small to move the price means the gap jumps across zero.
    if (step <= 1e-15 * std::max(1.0, std::abs(p))) return r;
    const double next = std::clamp(p + dir * step, lo, hi);
    if (next == p) return r;  // pinned at a bound
    last_dir = dir;
    p = next;
  }
  return r;
}

// --- centralized -----------------------------------------------------------

double su_utility_centralized(double rho, double q0, double aq) {
  const double arg = q0 + aq;
  if (!(arg > 0.0)) throw std::domain_error("SU utility: nonpositive log argument");
  return rho * std::log(arg);
}

double pu_reward_centralized(double eta, double plan_price, double aq, double q_avail) {
  if (!(q_avail > 0.0)) throw std::domain_error("PU reward: available data must be > 0");
  return eta * plan_price * aq / q_avail;
}

double closed_form_price(double rho, double q0, double q, double eta, double plan_price, double q_avail) {
  if (!(q > 0.0) || !(q_avail > 0.0)) throw std::domain_error("closed-form price: volumes must be > 0");
  return 0.5 * (rho * std::log(q0 + q) / q + eta * plan_price / q_avail);
}

double CentralizedMarket::volume(int k, double price) const {
  return a[k] * *inner_optimal_volume(rho[k], price, a[k], q0[k], q_min[k], q_cap[k]);
}

double CentralizedMarket::gap(int k, double price, double alpha) const {
  const double aq = volume(k, price);
  const double so = su_utility_centralized(rho[k], q0[k], aq) - price * aq;
  const double po = price * aq - pu_reward_centralized(eta[k], plan[k], aq, q_avail[k]);
  return so - alpha * po;
}

CentralizedMarket build_centralized_market(const NetworkScenario& s, const LinkModel& links, const TrustState& trust,
                                           const RevenueShares& shares, const NegotiationConfig& cfg) {
  CentralizedMarket m;
  std::vector<double> q_avail(s.m());
  for (int j = 0; j < s.m(); ++j) q_avail[j] = pu_sellable(s.pus[j]);
  // Feasibility of a link does not depend on its price.
  m.problem = build_centralized_problem(s, links, cfg.p0, trust, q_avail,
                                        [&](int i, int j) { return shares.allows(trust, i, j); });
  for (const auto& c : m.problem.candidates) {
    const auto& t = c.triple;
    m.rho.push_back(trust.su_to_pu(t.su, t.pu));
    m.q0.push_back(s.sus[t.su].q0);
    m.q_min.push_back(s.q_min(t.su));
    m.q_cap.push_back(q_avail[t.pu]);
    m.a.push_back(s.a(t.su, t.pu, t.channel));
    m.eta.push_back(shares.eta_of(t.pu));
    m.plan.push_back(plan_price_of(s.pus[t.pu], cfg));
    m.q_avail.push_back(std::max(q_avail[t.pu], 1e-300));
  }
  return m;
}

CentralizedEval evaluate_centralized(const CentralizedMarket& market, const std::vector<double>& prices) {
  if (static_cast<int>(prices.size()) != market.size()) throw std::invalid_argument("one price per candidate link");
  CentralizedEval ev;
  ev.problem = market.problem;
  for (int k = 0; k < market.size(); ++k) {
    auto& c = ev.problem.candidates[k];
    c.volume = market.volume(k, prices[k]);
    c.weight = su_utility_centralized(market.rho[k], market.q0[k], c.volume) - prices[k] * c.volume;
  }
  ev.assignment = solve_exact(ev.problem);
  ev.u_s = ev.assignment.objective;
  for (int k : ev.assignment.indices) {
    const double v = ev.problem.candidates[k].volume;
    ev.u_p += prices[k] * v - pu_reward_centralized(market.eta[k], market.plan[k], v, market.q_avail[k]);
  }
  return ev;
}

namespace {

/// Per-link negotiation. Each link moves by the sign of its own gap and
/// settles once |gap| <= χ / L, so any set of active links also meets χ.
void negotiate_link_prices(const CentralizedMarket& market, const NegotiationConfig& cfg,
                           CentralizedNegotiation& r) {
  const int L = market.size();
  const double link_tol = cfg.chi / std::max(1, L);
  constexpr double kPriceCap = 1e12;

  auto& price = r.prices;
  price.assign(L, cfg.p0);
  std::vector<double> step(L, cfg.dp);
  std::vector<int> last_dir(L, 0);
  std::vector<char> settled(L, 0), bracketed(L, 0);

  while (r.iterations < cfg.max_iters) {
    ++r.iterations;
    r.eval = evaluate_centralized(market, price);
    double active_q = 0.0, active_pq = 0.0;
    for (int k : r.eval.assignment.indices) {
      active_q += r.eval.problem.candidates[k].volume;
      active_pq += price[k] * r.eval.problem.candidates[k].volume;
    }
    r.trace.push_back(active_q > 0.0 ? active_pq / active_q : 0.0);

    bool all_settled = true;
    std::vector<double> gaps(L);
    for (int k = 0; k < L; ++k) {
      gaps[k] = market.gap(k, price[k], cfg.alpha_share);
      if (std::abs(gaps[k]) <= link_tol) settled[k] = 1;
      all_settled = all_settled && settled[k];
    }
    if (all_settled) {
      r.agreed = std::abs(r.eval.u_s - cfg.alpha_share * r.eval.u_p) <= cfg.chi;
      return;
    }
    for (int k = 0; k < L; ++k) {
      if (settled[k]) continue;
      const int dir = gaps[k] > 0.0 ? 1 : -1;
      if (last_dir[k] != 0) {
        if (dir != last_dir[k]) {
          step[k] *= 0.5;
          bracketed[k] = 1;
        } else if (cfg.adaptive_steps && !bracketed[k]) {
          step[k] *= 2.0;
        }
      }
      const double next = std::clamp(price[k] + dir * step[k], 1e-9, kPriceCap);
      if (step[k] <= 1e-15 * std::max(1.0, price[k]) || next == price[k]) {
        settled[k] = 1;
        continue;
      }
      last_dir[k] = dir;
      price[k] = next;
    }
  }
}

}  // namespace

CentralizedNegotiation negotiate_centralized(const CentralizedMarket& market, const NegotiationConfig& cfg) {
  CentralizedNegotiation r;
  const int L = market.size();
  if (cfg.per_link_prices) {
    negotiate_link_prices(market, cfg, r);
    return r;
  }
  auto gap = [&](double p) {
    const auto e = evaluate_centralized(market, std::vector<double>(L, p));
    return e.u_s - cfg.alpha_share * e.u_p;
  };
  const auto neg = negotiate_price(gap, cfg.p0, cfg.dp, cfg.chi, cfg.max_iters, cfg.adaptive_steps);
  r.prices.assign(L, neg.price);
  r.eval = evaluate_centralized(market, r.prices);
  r.agreed = neg.converged;
  r.iterations = neg.iterations;
  r.trace = neg.trace;
  return r;
}

CentralizedMarket single_link_market(double rho, double q0, double q, double eta, double plan_price,
                                     double q_avail) {
  if (!(q > 0.0) || !(q_avail > 0.0)) throw std::domain_error("single link: volumes must be > 0");
  CentralizedMarket m;
  m.problem.n_su = 1;
  m.problem.n_pu = 1;
  m.problem.pu_budget = {kUnbounded};
  m.problem.add({{0, 0, 0}, 0.0, q});
  m.problem.conflicts.resize(1);
  m.rho = {rho};
  m.q0 = {q0};
  m.q_min = {q};
  m.q_cap = {q};
  m.a = {1.0};
  m.eta = {eta};
  m.plan = {plan_price};
  m.q_avail = {q_avail};
  return m;
}

SchemeOutcome run_centralized(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares,
                              const NegotiationConfig& cfg) {
  cfg.validate();
  shares.validate();
  const auto t0 = Clock::now();
  const LinkModel links(s);
  const auto market = build_centralized_market(s, links, trust, shares, cfg);

  SchemeOutcome out;
  out.scheme = "centralized";
  const auto neg = negotiate_centralized(market, cfg);
  const auto& ev = neg.eval;
  const auto& price = neg.prices;
  out.price_trace = neg.trace;
  const bool agreed = neg.agreed;
  const int it = neg.iterations;

  out.u_su.assign(s.n(), 0.0);
  out.u_pu.assign(s.m(), 0.0);
  double pq = 0.0;
  for (int k : ev.assignment.indices) {
    const auto& c = ev.problem.candidates[k];
    const auto& t = c.triple;
    out.topology.add(t, c.volume / market.a[k], price[k]);
    out.u_su[t.su] = c.weight;
    out.u_pu[t.pu] += pu_reward_centralized(market.eta[k], market.plan[k], c.volume, market.q_avail[k]);
    out.total_q += c.volume;
    pq += price[k] * c.volume;
  }
  out.agreed_q = out.total_q;
  out.u_so = ev.u_s;
  out.u_po = ev.u_p;
  out.price = out.total_q > 0.0 ? pq / out.total_q : 0.0;
  out.iterations = it;
  out.converged = agreed || ev.assignment.chosen.empty();
  out.wall_time = seconds_since(t0);
  return out;
}

// --- hybrid ----------------------------------------------------------------

SuDecision su_solve_hybrid(double rho, double pi, double q0, double q_min, double q_max) {
  if (!(pi > 0.0)) throw std::domain_error("hybrid SU: price must be > 0");
  if (q_min > q_max) return {};
  const double q = std::clamp(rho / pi - q0, q_min, q_max);
  const double u = rho * std::log(q0 + q) - pi * q;
  return {u > 0.0, q};
}

std::vector<double> pu_solve_hybrid(const std::vector<HybridRequest>& requests, double pi, double eta, double e_j,
                                    double q0_pu, double q_avail) {
  if (!(pi > 0.0)) throw std::domain_error("hybrid PU: price must be > 0");
  const std::size_t n = requests.size();
  std::vector<double> want(n, 0.0), value(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = requests[k];
    if (r.q_min > r.demand) continue;
    const double interior = eta > 0.0 ? q0_pu - r.rho_pu / (eta * pi) : 0.0;
    want[k] = std::clamp(interior, r.q_min, r.demand);
    const double left = q0_pu - want[k];
    value[k] = left > 0.0 ? r.rho_pu * std::log(left) + eta * pi * want[k] - e_j : -kUnbounded;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });
  std::vector<double> out(n, 0.0);
  double left = q_avail;
  for (std::size_t k : order) {
    if (want[k] <= 0.0) continue;
    const double give = std::min(want[k], left);
    if (give + 1e-12 < requests[k].q_min || give <= 0.0) continue;
    out[k] = give;
    left -= give;
  }
  return out;
}

std::optional<PairAgreement> negotiate_pair(const NetworkScenario& s, const TrustState& trust,
                                            const RevenueShares& shares, int su, int pu, double q_avail,
                                            const NegotiationConfig& cfg) {
  const Node& si = s.sus[su];
  const Node& pj = s.pus[pu];
  const double q_min = s.q_min(su);
  q_avail = std::min(q_avail, pu_sellable(pj));
  if (q_min > q_avail) return std::nullopt;
  const double rho_ij = trust.su_to_pu(su, pu);
  const double rho_ji = trust.pu_to_su(pu, su);
  const double eta = shares.eta_of(pu);
  const double cap = plan_price_of(pj, cfg) / pj.q0;

  auto trade = [&](double pi, double& u, double& v) {
    const auto d = su_solve_hybrid(rho_ij, pi, si.q0, q_min, q_avail);
    const auto supply = pu_solve_hybrid({{su, rho_ji, q_min, d.volume}}, pi, eta, pj.energy_cost, pj.q0, q_avail);
    const double q = supply[0];
    u = rho_ij * std::log(si.q0 + q) - pi * q;
    v = rho_ji * std::log(pj.q0 - q) + eta * pi * q - pj.energy_cost;
    return q;
  };
  auto gap = [&](double pi) {
    double u, v;
    trade(pi, u, v);
    return u - cfg.alpha_share * v;
  };
  const auto neg = negotiate_price(gap, std::min(cfg.p0, cap), cfg.dpi, cfg.chi_prime, cfg.max_iters,
                                   cfg.adaptive_steps, 1e-9, cap);
  PairAgreement a;
  a.su = su;
  a.pu = pu;
  a.pi = neg.price;
  a.volume = trade(neg.price, a.u, a.v);
  a.converged = neg.converged;
  a.iterations = neg.iterations;
  if (a.volume <= 0.0 || a.u <= 0.0) return std::nullopt;
  return a;
}

namespace {

struct ChannelEval {
  Assignment assignment;
  AssignmentProblem problem;
  double u_s = 0.0;
  double u_p = 0.0;
};

ChannelEval evaluate_channels(const NetworkScenario& s, const LinkModel& links, const TrustState& trust,
                              const RevenueShares& shares, const std::vector<AgreedPair>& pairs, double eps) {
  ChannelEval ev;
  ev.problem = build_channel_problem(s, links, pairs, eps, trust);
  ev.assignment = solve_exact(ev.problem);
  ev.u_s = ev.assignment.objective;
  for (int k : ev.assignment.indices) {
    const auto& c = ev.problem.candidates[k];
    const auto& t = c.triple;
    const double a = s.a(t.su, t.pu, t.channel);
    double pi = 0.0;
    for (const auto& p : pairs)
      if (p.su == t.su && p.pu == t.pu) pi = p.data_price;
    ev.u_p += (1.0 - shares.eta_of(t.pu)) * pi * c.volume + a * eps;
  }
  return ev;
}

/// PUs an SU can negotiate with: trusted, in range with enough capacity on
/// an available channel, and a plan larger than the SU's demand floor.
std::vector<int> hybrid_partners(const NetworkScenario& s, const LinkModel& links, const TrustState& trust,
                                 const RevenueShares& shares, int su) {
  std::vector<int> out;
  for (int j = 0; j < s.m(); ++j) {
    if (!shares.allows(trust, su, j)) continue;
    bool any = false;
    for (int b = 0; b < s.channels && !any; ++b) any = links.qos_feasible(su, j, b);
    if (any) out.push_back(j);
  }
  return out;
}

}  // namespace

SchemeOutcome run_hybrid(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares,
                         const NegotiationConfig& cfg) {
  cfg.validate();
  shares.validate();
  const auto t0 = Clock::now();
  const LinkModel links(s);

  SchemeOutcome out;
  out.scheme = "hybrid";
  out.u_su.assign(s.n(), 0.0);
  out.u_pu.assign(s.m(), 0.0);

  // Stage A: each SU ranks its partners by utility at the opening price and
  // works down the list until some PU accepts it.
  std::vector<std::vector<int>> ranked(s.n());
  for (int i = 0; i < s.n(); ++i) {
    auto partners = hybrid_partners(s, links, trust, shares, i);
    std::vector<std::pair<double, int>> scored;
    for (int j : partners) {
      const auto d = su_solve_hybrid(trust.su_to_pu(i, j), cfg.p0, s.sus[i].q0, s.q_min(i), pu_sellable(s.pus[j]));
      const double u = trust.su_to_pu(i, j) * std::log(s.sus[i].q0 + d.volume) - cfg.p0 * d.volume;
      scored.push_back({u, j});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [u, j] : scored) ranked[i].push_back(j);
  }

  std::vector<double> remaining(s.m());
  for (int j = 0; j < s.m(); ++j) remaining[j] = pu_sellable(s.pus[j]);
  std::vector<std::size_t> next(s.n(), 0);
  std::vector<char> matched(s.n(), 0);
  std::vector<PairAgreement> agreements;
  int rounds = 0;
  while (true) {
    std::vector<std::vector<int>> proposals(s.m());
    bool any = false;
    for (int i = 0; i < s.n(); ++i) {
      if (matched[i] || next[i] >= ranked[i].size()) continue;
      proposals[ranked[i][next[i]]].push_back(i);
      any = true;
    }
    if (!any) break;
    ++rounds;
    for (int j = 0; j < s.m(); ++j) {
      if (proposals[j].empty()) continue;
      std::vector<PairAgreement> offers;
      std::vector<int> failed;
      for (int i : proposals[j]) {
        auto a = negotiate_pair(s, trust, shares, i, j, remaining[j], cfg);
        out.iterations += a ? a->iterations : 1;
        if (a) {
          offers.push_back(*a);
        } else {
          failed.push_back(i);
        }
      }
      std::stable_sort(offers.begin(), offers.end(), [](const auto& a, const auto& b) {
        if (a.v != b.v) return a.v > b.v;
        return a.su < b.su;
      });
      for (auto& a : offers) {
        if (a.volume > remaining[j] + 1e-12) {
          auto again = negotiate_pair(s, trust, shares, a.su, j, remaining[j], cfg);
          if (!again) {
            failed.push_back(a.su);
            continue;
          }
          a = *again;
        }
        remaining[j] = std::max(0.0, remaining[j] - a.volume);
        matched[a.su] = 1;
        agreements.push_back(a);
      }
      for (int i : failed) ++next[i];
    }
  }

  std::vector<AgreedPair> pairs;
  for (const auto& a : agreements) {
    pairs.push_back({a.su, a.pu, a.volume, a.pi});
    out.agreed_q += a.volume;
    ++out.pairs_total;
    if (a.converged) {
      ++out.pairs_converged;
      out.max_pair_gap = std::max(out.max_pair_gap, std::abs(a.u - cfg.alpha_share * a.v));
    }
  }

  // Stage B: channel assignment with a negotiated channel price.
  auto gap = [&](double eps) {
    const auto ev = evaluate_channels(s, links, trust, shares, pairs, eps);
    return ev.u_s - cfg.alpha_share * ev.u_p;
  };
  NegotiationResult neg;
  if (!pairs.empty()) {
    neg = negotiate_price(gap, cfg.p0, cfg.deps, cfg.chi, cfg.max_iters, cfg.adaptive_steps);
  } else {
    neg.converged = true;
    neg.price = cfg.p0;
  }
  const auto ev = evaluate_channels(s, links, trust, shares, pairs, neg.price);
  for (int k : ev.assignment.indices) {
    const auto& c = ev.problem.candidates[k];
    const auto& t = c.triple;
    const double a = s.a(t.su, t.pu, t.channel);
    const auto it = std::find_if(agreements.begin(), agreements.end(),
                                 [&](const auto& g) { return g.su == t.su && g.pu == t.pu; });
    out.topology.add(t, it->volume, it->pi + neg.price / it->volume);
    out.u_su[t.su] = c.weight;
    out.u_pu[t.pu] += it->v;
    out.total_q += a * it->volume;
  }
  out.u_so = ev.u_s;
  out.u_po = ev.u_p;
  out.price = neg.price;
  out.iterations += neg.iterations;
  out.converged = neg.converged || ev.assignment.chosen.empty();
  out.price_trace = neg.trace;
  out.wall_time = seconds_since(t0);
  return out;
}

double trading_efficiency(const SchemeOutcome& outcome) {
  if (outcome.agreed_q <= 0.0) return 1.0;
  return outcome.total_q / outcome.agreed_q;
}

}  // namespace cdna
