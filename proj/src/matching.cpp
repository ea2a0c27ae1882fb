#include "cdna/matching.hpp"

#include "cdna/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cdna {

namespace {

constexpr double kPuReserve = 1e-6;
constexpr double kBudgetTol = 1e-9;

const PrefEntry* find_entry(const std::vector<PrefEntry>& list, int partner, int channel) {
  for (const auto& e : list)
    if (e.partner == partner && e.channel == channel) return &e;
  return nullptr;
}

int rank_of(const std::vector<PrefEntry>& list, int partner, int channel) {
  for (std::size_t k = 0; k < list.size(); ++k)
    if (list[k].partner == partner && list[k].channel == channel) return static_cast<int>(k);
  return -1;
}

/// Working view of a matching: per-SU slot and per-PU held triples.
struct Book {
  std::vector<std::optional<Triple>> su;
  std::vector<std::vector<Triple>> pu;

  Book(int n, int m) : su(n), pu(m) {}
  void add(const Triple& t) {
    su[t.su] = t;
    pu[t.pu].push_back(t);
  }
  void remove(const Triple& t) {
    su[t.su].reset();
    auto& v = pu[t.pu];
    v.erase(std::remove(v.begin(), v.end(), t), v.end());
  }
  std::set<Triple> to_set() const {
    std::set<Triple> out;
    for (const auto& v : pu) out.insert(v.begin(), v.end());
    return out;
  }
};

Book book_of(const DistributedGame& g, const std::set<Triple>& m) {
  Book b(g.scenario().n(), g.scenario().m());
  for (const auto& t : m) b.add(t);
  return b;
}

double pu_value_of(const MarketState& st, const Triple& t) {
  const auto* e = find_entry(st.pu_prefs[t.pu], t.su, t.channel);
  return e ? e->utility : -std::numeric_limits<double>::infinity();
}

double su_value_of(const MarketState& st, const Triple& t) {
  const auto* e = find_entry(st.su_prefs[t.su], t.pu, t.channel);
  return e ? e->utility : -std::numeric_limits<double>::infinity();
}

bool interferes_with_others(const DistributedGame& g, const Book& b, const Triple& t,
                            const std::vector<Triple>& ignore) {
  for (const auto& v : b.pu)
    for (const auto& x : v) {
      if (std::find(ignore.begin(), ignore.end(), x) != ignore.end()) continue;
      if (g.links().conflicts(t, x)) return true;
    }
  return false;
}

/// Whether PU j can hold exactly `held` (quota, budget, one SU per channel).
bool pu_can_hold(const DistributedGame& g, const MarketState& st, int j, const std::vector<Triple>& held) {
  std::vector<int> sus;
  std::set<int> channels;
  double used = 0.0;
  for (const auto& t : held) {
    sus.push_back(t.su);
    if (!channels.insert(t.channel).second) return false;
    used += g.traded_volume(t, st.price(t.pu, t.channel));
  }
  const auto q = g.quota(j, sus);
  if (static_cast<int>(held.size()) > q.channel_quota) return false;
  return used <= q.budget * (1.0 + kBudgetTol) + kBudgetTol;
}

/// Best way for PU j to take SU i on `channel`: nothing to evict (nullopt
/// inner) or the evicted triple. Outer nullopt when j would not take i.
std::optional<std::optional<Triple>> pu_accepts(const DistributedGame& g, const MarketState& st, const Book& b,
                                                int i, int j, int channel) {
  const Triple t{i, j, channel};
  const double v = pu_value_of(st, t);
  if (!std::isfinite(v)) return std::nullopt;
  std::vector<Triple> ignore;
  if (b.su[i]) ignore.push_back(*b.su[i]);

  auto held = b.pu[j];
  held.erase(std::remove_if(held.begin(), held.end(), [&](const Triple& x) { return x.su == i; }), held.end());

  {
    auto with = held;
    with.push_back(t);
    if (pu_can_hold(g, st, j, with) && !interferes_with_others(g, b, t, ignore)) return std::optional<Triple>{};
  }
  // Evict the least valued SU that frees enough room.
  std::vector<Triple> order = held;
  std::sort(order.begin(), order.end(), [&](const Triple& x, const Triple& y) {
    const double vx = pu_value_of(st, x), vy = pu_value_of(st, y);
    if (vx != vy) return vx < vy;
    return x < y;
  });
  for (const auto& k : order) {
    if (!(pu_value_of(st, k) < v)) break;
    auto with = held;
    with.erase(std::remove(with.begin(), with.end(), k), with.end());
    with.push_back(t);
    auto ign = ignore;
    ign.push_back(k);
    if (pu_can_hold(g, st, j, with) && !interferes_with_others(g, b, t, ign)) return std::optional<Triple>{k};
  }
  return std::nullopt;
}

struct Block {
  Triple t;
  std::optional<Triple> evict;
};

std::optional<Block> find_block(const DistributedGame& g, const MarketState& st, const Book& b, int i,
                                std::optional<int> only_pu = std::nullopt) {
  const double current = b.su[i] ? su_value_of(st, *b.su[i]) : -std::numeric_limits<double>::infinity();
  for (const auto& e : st.su_prefs[i]) {
    if (!(e.utility > current)) break;  // sorted
    if (only_pu && e.partner != *only_pu) continue;
    if (b.su[i] && b.su[i]->pu == e.partner) continue;  // already matched with this PU
    if (auto acc = pu_accepts(g, st, b, i, e.partner, e.channel)) return Block{{i, e.partner, e.channel}, *acc};
  }
  return std::nullopt;
}

void deferred_acceptance(const DistributedGame& g, MarketState& st, Book& b) {
  const int n = g.scenario().n();
  std::vector<std::size_t> next(n, 0);
  for (int i = 0; i < n; ++i) {
    if (!b.su[i]) continue;
    const int r = rank_of(st.su_prefs[i], b.su[i]->pu, b.su[i]->channel);
    next[i] = r < 0 ? 0 : static_cast<std::size_t>(r);
  }
  while (true) {
    std::vector<std::vector<Triple>> proposals(g.scenario().m());
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (b.su[i] || next[i] >= st.su_prefs[i].size()) continue;
      const auto& e = st.su_prefs[i][next[i]];
      proposals[e.partner].push_back({i, e.partner, e.channel});
      any = true;
    }
    if (!any) break;
    for (int j = 0; j < g.scenario().m(); ++j) {
      if (proposals[j].empty()) continue;
      std::vector<Triple> pool = b.pu[j];
      pool.insert(pool.end(), proposals[j].begin(), proposals[j].end());
      std::sort(pool.begin(), pool.end(), [&](const Triple& x, const Triple& y) {
        const double vx = pu_value_of(st, x), vy = pu_value_of(st, y);
        if (vx != vy) return vx > vy;
        return x < y;
      });
      for (const auto& t : b.pu[j]) b.su[t.su].reset();
      b.pu[j].clear();
      for (const auto& t : pool) {
        bool ok = std::isfinite(pu_value_of(st, t));
        if (ok) {
          auto with = b.pu[j];
          with.push_back(t);
          ok = pu_can_hold(g, st, j, with) && !interferes_with_others(g, b, t, {});
        }
        if (ok) {
          b.add(t);
        } else {
          ++next[t.su];
        }
      }
    }
  }
}

double mean_matched_price(const MarketState& st) {
  if (st.matching.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : st.matching) sum += st.price(t.pu, t.channel);
  return sum / static_cast<double>(st.matching.size());
}

}  // namespace

void MatchingConfig::validate() const {
  if (!(p0 > 0.0) || !(price_tol > 0.0) || !(chi > 0.0) || !(dpsi > 0.0)) {
    throw std::invalid_argument("matching parameters must be positive");
  }
  if (price_max_iters < 1 || max_rounds < 1 || psi_max_iters < 1) throw std::invalid_argument("iteration caps must be >= 1");
  if (pref_limit && *pref_limit < 1) throw std::invalid_argument("preference limit must be >= 1");
}

double MarketState::price(int pu, int channel) const {
  const auto it = prices.find({pu, channel});
  if (it == prices.end()) throw std::out_of_range("no price for slot");
  return it->second;
}

std::optional<Triple> MarketState::of_su(int su) const {
  for (const auto& t : matching)
    if (t.su == su) return t;
  return std::nullopt;
}

// --- game ------------------------------------------------------------------

DistributedGame::DistributedGame(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares)
    : s_(&s), trust_(&trust), shares_(shares), links_(s) {
  shares_.validate();
}

double DistributedGame::sellable(int pu) const { return std::max(0.0, s_->pus[pu].q0 - kPuReserve); }

bool DistributedGame::candidate(int su, int pu, int channel) const {
  if (!links_.qos_feasible(su, pu, channel)) return false;
  if (!shares_.allows(*trust_, su, pu)) return false;
  if (!(shares_.eta_of(pu) > 0.0) || !(shares_.sigma_of(su) < 1.0)) return false;
  return s_->q_min(su) <= sellable(pu);
}

double DistributedGame::traded_volume(const Triple& t, double price) const {
  const double a = s_->a(t.su, t.pu, t.channel);
  const double d = demand(trust_->su_to_pu(t.su, t.pu), price, shares_.sigma_of(t.su), s_->sus[t.su].q0, a);
  const double sp = supply(trust_->pu_to_su(t.pu, t.su), price, shares_.eta_of(t.pu), s_->pus[t.pu].q0, a);
  return std::clamp(a * std::min(d, sp), s_->q_min(t.su), sellable(t.pu));
}

double DistributedGame::su_value(const Triple& t, double price) const {
  const double a = s_->a(t.su, t.pu, t.channel);
  const double rho = trust_->su_to_pu(t.su, t.pu);
  const double sigma = shares_.sigma_of(t.su);
  const double q0 = s_->sus[t.su].q0;
  const double aq = std::clamp(a * demand(rho, price, sigma, q0, a), s_->q_min(t.su), sellable(t.pu));
  return su_utility_dist(rho, q0, a, aq / a, price, sigma);
}

double DistributedGame::pu_value(const Triple& t, double price) const {
  const double a = s_->a(t.su, t.pu, t.channel);
  const double rho = trust_->pu_to_su(t.pu, t.su);
  const double eta = shares_.eta_of(t.pu);
  const double q0 = s_->pus[t.pu].q0;
  const double aq = std::clamp(a * supply(rho, price, eta, q0, a), s_->q_min(t.su), sellable(t.pu));
  return pu_utility_dist(rho, q0, a, aq / a, price, eta, s_->pus[t.pu].energy_cost);
}

double DistributedGame::su_utility(const Triple& t, double price) const {
  const double a = s_->a(t.su, t.pu, t.channel);
  return su_utility_dist(trust_->su_to_pu(t.su, t.pu), s_->sus[t.su].q0, a, traded_volume(t, price) / a, price,
                         shares_.sigma_of(t.su));
}

double DistributedGame::pu_utility(const Triple& t, double price) const {
  const double a = s_->a(t.su, t.pu, t.channel);
  return pu_utility_dist(trust_->pu_to_su(t.pu, t.su), s_->pus[t.pu].q0, a, traded_volume(t, price) / a, price,
                         shares_.eta_of(t.pu), s_->pus[t.pu].energy_cost);
}

Market DistributedGame::slot_market(int pu, int channel, const std::vector<int>& buyers) const {
  Market m;
  std::map<int, std::vector<int>> sellers;  // PU -> buyers it could serve on this channel
  for (int i : buyers) {
    m.buyers.push_back({trust_->su_to_pu(i, pu), shares_.sigma_of(i), s_->sus[i].q0, s_->a(i, pu, channel)});
    for (int k = 0; k < s_->m(); ++k)
      if (candidate(i, k, channel)) sellers[k].push_back(i);
  }
  for (const auto& [k, served] : sellers) {
    double rho = 0.0, a = 0.0;
    for (int i : served) {
      rho += trust_->pu_to_su(k, i);
      a += s_->a(i, k, channel);
    }
    const double n = static_cast<double>(served.size());
    m.sellers.push_back({rho / n, shares_.eta_of(k), s_->pus[k].q0, a / n});
  }
  return m;
}

Market DistributedGame::pair_market(const Triple& t) const {
  Market m;
  const double a = s_->a(t.su, t.pu, t.channel);
  m.buyers.push_back({trust_->su_to_pu(t.su, t.pu), shares_.sigma_of(t.su), s_->sus[t.su].q0, a});
  m.sellers.push_back({trust_->pu_to_su(t.pu, t.su), shares_.eta_of(t.pu), s_->pus[t.pu].q0, a});
  return m;
}

QuotaInfo DistributedGame::quota(int pu, const std::vector<int>& proposers) const {
  QuotaInfo q;
  q.budget = sellable(pu);
  double floor = std::numeric_limits<double>::infinity();
  for (int i : proposers) {
    const double qm = s_->q_min(i);
    if (qm > 0.0) floor = std::min(floor, qm);
  }
  if (std::isinf(floor)) {
    q.su_quota = static_cast<int>(proposers.size());
  } else {
    q.su_quota = static_cast<int>(std::min(std::floor(q.budget / floor), 1e9));
  }
  q.channel_quota = std::min(s_->channels, q.su_quota);
  return q;
}

// --- preferences and prices ------------------------------------------------

void build_preferences(const DistributedGame& g, MarketState& st, std::optional<int> limit) {
  const auto& s = g.scenario();
  st.su_prefs.assign(s.n(), {});
  st.pu_prefs.assign(s.m(), {});
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.m(); ++j)
      for (int b = 0; b < s.channels; ++b) {
        if (!g.candidate(i, j, b)) continue;
        const Triple t{i, j, b};
        const double p = st.price(j, b);
        const double u = g.su_value(t, p);
        const double v = g.pu_value(t, p);
        if (u > 0.0) st.su_prefs[i].push_back({j, b, u});
        if (v > 0.0) st.pu_prefs[j].push_back({i, b, v});
      }
  auto order = [](const PrefEntry& x, const PrefEntry& y) {
    if (x.utility != y.utility) return x.utility > y.utility;
    if (x.partner != y.partner) return x.partner < y.partner;
    return x.channel < y.channel;
  };
  for (auto& l : st.su_prefs) {
    std::sort(l.begin(), l.end(), order);
    if (limit && static_cast<int>(l.size()) > *limit) l.resize(*limit);
  }
  for (auto& l : st.pu_prefs) {
    std::sort(l.begin(), l.end(), order);
    if (limit && static_cast<int>(l.size()) > *limit) l.resize(*limit);
  }
}

int initialize_prices(const DistributedGame& g, MarketState& st, const MatchingConfig& cfg) {
  const auto& s = g.scenario();
  int unsettled = 0;
  for (int j = 0; j < s.m(); ++j)
    for (int b = 0; b < s.channels; ++b) {
      std::vector<int> buyers;
      for (int i = 0; i < s.n(); ++i)
        if (g.candidate(i, j, b)) buyers.push_back(i);
      if (buyers.empty()) {
        st.prices[{j, b}] = cfg.p0;
        continue;
      }
      const auto r = iterate_price(g.slot_market(j, b, buyers), cfg.p0, cfg.rate, cfg.price_tol, cfg.price_max_iters);
      if (!r.converged) ++unsettled;
      st.prices[{j, b}] = std::isfinite(r.price) ? std::clamp(r.price, kMinPrice, 1e12) : cfg.p0;
    }
  return unsettled;
}

// --- matching --------------------------------------------------------------

bool match_round(const DistributedGame& g, MarketState& st, int repair_cap) {
  Book b = book_of(g, {});
  // Keep the current matches that both sides still list.
  for (const auto& t : st.matching)
    if (std::isfinite(su_value_of(st, t)) && std::isfinite(pu_value_of(st, t))) {
      auto with = b.pu[t.pu];
      with.push_back(t);
      if (pu_can_hold(g, st, t.pu, with) && !interferes_with_others(g, b, t, {})) b.add(t);
    }
  deferred_acceptance(g, st, b);

  // Satisfying blocking pairs in a fixed order can cycle when interference
  // couples the PUs; picking one at random (seeded, so runs repeat) breaks
  // such cycles.
  Rng rng(split_seed(0x6d61746368ULL, static_cast<std::uint64_t>(st.delta)));
  bool stable = false;
  for (int k = 0; k < repair_cap; ++k) {
    std::vector<Block> blocks;
    for (int i = 0; i < g.scenario().n(); ++i)
      if (auto blk = find_block(g, st, b, i)) blocks.push_back(*blk);
    if (blocks.empty()) {
      stable = true;
      break;
    }
    const auto* blk = &blocks[uniform_int(rng, static_cast<int>(blocks.size()))];
    if (b.su[blk->t.su]) b.remove(*b.su[blk->t.su]);
    if (blk->evict) b.remove(*blk->evict);
    b.add(blk->t);
    // Displaced SUs look for a new slot before the next repair.
    deferred_acceptance(g, st, b);
  }
  st.matching = b.to_set();
  return stable;
}

bool is_blocking_pair(const DistributedGame& g, const MarketState& st, int su, int pu) {
  const auto cur = st.of_su(su);
  if (cur && cur->pu == pu) return false;
  const Book b = book_of(g, st.matching);
  return find_block(g, st, b, su, pu).has_value();
}

bool verify_stability(const DistributedGame& g, const MarketState& st) {
  const Book b = book_of(g, st.matching);
  for (int i = 0; i < g.scenario().n(); ++i)
    if (find_block(g, st, b, i)) return false;
  return true;
}

bool matching_feasible(const DistributedGame& g, const MarketState& st) {
  const Book b = book_of(g, st.matching);
  std::vector<int> per_su(g.scenario().n(), 0);
  for (const auto& t : st.matching) {
    if (!g.candidate(t.su, t.pu, t.channel)) return false;
    if (++per_su[t.su] > 1) return false;
  }
  for (int j = 0; j < g.scenario().m(); ++j)
    if (!pu_can_hold(g, st, j, b.pu[j])) return false;
  for (auto x = st.matching.begin(); x != st.matching.end(); ++x)
    for (auto y = std::next(x); y != st.matching.end(); ++y)
      if (g.links().conflicts(*x, *y)) return false;
  return true;
}

// --- operators -------------------------------------------------------------

OperatorUtilities operator_utilities_dist(const DistributedGame& g, const MarketState& st, double psi) {
  double x = 0.0, y = 0.0;
  for (const auto& t : st.matching) {
    const double p = st.price(t.pu, t.channel);
    const double aq = g.traded_volume(t, p);
    x += g.su_utility(t, p) - g.shares().sigma_of(t.su) * p * aq;
    y += (1.0 - g.shares().eta_of(t.pu)) * p * aq;
  }
  return {(1.0 - psi) * x, psi * x + y};
}

PsiResult negotiate_revenue_share(const DistributedGame& g, const MarketState& st, const MatchingConfig& cfg,
                                  double psi0) {
  auto gap = [&](double psi) {
    const auto u = operator_utilities_dist(g, st, psi);
    return u.u_s - u.u_p;
  };
  const auto r = negotiate_price(gap, std::clamp(psi0, 0.0, 1.0), cfg.dpsi, cfg.chi, cfg.psi_max_iters, false, 0.0,
                                 1.0);
  return {r.price, r.converged, r.iterations};
}

MatchingRun solve_matching(const DistributedGame& g, const MatchingConfig& cfg, const MarketState* warm) {
  cfg.validate();
  const auto& s = g.scenario();
  MatchingRun run;
  auto& st = run.state;
  run.unsettled_markets = initialize_prices(g, st, cfg);
  if (warm) {
    // Matched slots keep their negotiated prices; the rest re-enter at Stage 1.
    for (const auto& t : warm->matching) {
      const auto it = warm->prices.find({t.pu, t.channel});
      if (it != warm->prices.end() && st.prices.count(it->first)) st.prices[it->first] = it->second;
    }
    for (const auto& t : warm->matching)
      if (t.su < s.n() && t.pu < s.m() && t.channel < s.channels && g.candidate(t.su, t.pu, t.channel))
        st.matching.insert(t);
  }
  build_preferences(g, st, cfg.pref_limit);

  const int repair_cap = std::max(100, 10 * s.n() * std::max(1, s.m()) * std::max(1, s.channels));
  std::set<Triple> previous = st.matching;
  bool have_previous = warm != nullptr;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    st.delta = round;
    run.rounds = round + 1;
    const bool repaired = match_round(g, st, repair_cap);
    for (const auto& t : st.matching) {
      auto& p = st.prices[{t.pu, t.channel}];
      const auto r = iterate_price(g.pair_market(t), p, cfg.rate, cfg.price_tol, cfg.price_max_iters);
      if (!r.converged) ++run.unsettled_markets;
      if (std::isfinite(r.price)) p = std::clamp(r.price, kMinPrice, 1e12);
    }
    build_preferences(g, st, cfg.pref_limit);
    run.price_trace.push_back(mean_matched_price(st));
    if (repaired && have_previous && st.matching == previous && verify_stability(g, st)) {
      run.converged = true;
      break;
    }
    previous = st.matching;
    have_previous = true;
  }
  return run;
}

SchemeOutcome outcome_from_matching(const DistributedGame& g, const MatchingRun& run, const MatchingConfig& cfg) {
  const auto& s = g.scenario();
  const auto& st = run.state;
  SchemeOutcome out;
  out.scheme = "distributed";
  out.u_su.assign(s.n(), 0.0);
  out.u_pu.assign(s.m(), 0.0);
  double psum = 0.0;
  for (const auto& t : st.matching) {
    const double p = st.price(t.pu, t.channel);
    const double aq = g.traded_volume(t, p);
    out.topology.add(t, aq / s.a(t.su, t.pu, t.channel), p);
    out.u_su[t.su] = g.su_utility(t, p);
    out.u_pu[t.pu] += g.pu_utility(t, p);
    out.total_q += aq;
    psum += p;
  }
  out.agreed_q = out.total_q;
  out.price = st.matching.empty() ? 0.0 : psum / static_cast<double>(st.matching.size());
  out.iterations = run.rounds;
  out.price_trace = run.price_trace;
  out.stable = run.converged && verify_stability(g, st);
  bool psi_ok = true;
  double psi = g.shares().psi;
  if (cfg.negotiate_psi) {
    const auto r = negotiate_revenue_share(g, st, cfg, psi);
    psi = r.psi;
    psi_ok = r.converged;
  }
  const auto ops = operator_utilities_dist(g, st, psi);
  out.psi = psi;
  out.u_so = ops.u_s;
  out.u_po = ops.u_p;
  out.converged = run.converged && psi_ok && run.unsettled_markets == 0;
  return out;
}

SchemeOutcome run_matching(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares,
                           const MatchingConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const DistributedGame g(s, trust, shares);
  const auto run = solve_matching(g, cfg);
  auto out = outcome_from_matching(g, run, cfg);
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::map<MarketKey, double> slot_equilibrium_prices(const NetworkScenario& s, const TrustState& trust,
                                                    const RevenueShares& shares, const MatchingConfig& cfg) {
  const DistributedGame g(s, trust, shares);
  MarketState st;
  initialize_prices(g, st, cfg);
  std::map<MarketKey, double> out;
  for (int j = 0; j < s.m(); ++j)
    for (int b = 0; b < s.channels; ++b)
      for (int i = 0; i < s.n(); ++i)
        if (g.candidate(i, j, b)) {
          out[{j, b}] = st.price(j, b);
          break;
        }
  return out;
}

}  // namespace cdna
