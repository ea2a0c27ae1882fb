#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "cdna/assign_solver.hpp"
#include "fixtures.hpp"

using namespace cdna;
using namespace cdna::testing;

namespace {

// Independent brute force: every subset of candidates, checked directly
// against the problem data.
double brute_force(const AssignmentProblem& p) {
  const int K = static_cast<int>(p.candidates.size());
  REQUIRE(K <= 20);
  auto conflict = [&](int x, int y) {
    if (p.candidates[x].triple.su == p.candidates[y].triple.su) return true;
    const auto& c = p.conflicts[x];
    return std::find(c.begin(), c.end(), y) != c.end();
  };
  double best = 0.0;
  for (long mask = 0; mask < (1L << K); ++mask) {
    std::vector<int> pick;
    for (int k = 0; k < K; ++k)
      if (mask >> k & 1) pick.push_back(k);
    bool ok = true;
    std::vector<double> used(p.n_pu, 0.0);
    for (std::size_t a = 0; a < pick.size() && ok; ++a) {
      used[p.candidates[pick[a]].triple.pu] += p.candidates[pick[a]].volume;
      for (std::size_t b = a + 1; b < pick.size() && ok; ++b) ok = !conflict(pick[a], pick[b]);
    }
    for (int j = 0; j < p.n_pu && ok; ++j) ok = used[j] <= p.pu_budget[j] * (1 + 1e-9) + 1e-9;
    if (!ok) continue;
    double w = 0.0;
    for (int k : pick) w += p.candidates[k].weight;
    best = std::max(best, w);
  }
  return best;
}

AssignmentProblem random_problem(Rng& rng, int n, int m, int b, double density) {
  AssignmentProblem p;
  p.n_su = n;
  p.n_pu = m;
  for (int j = 0; j < m; ++j) p.pu_budget.push_back(bernoulli(rng, 0.3) ? kUnbounded : uniform(rng, 0.5, 6.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < b; ++c)
        if (bernoulli(rng, density)) p.add({{i, j, c}, uniform(rng, -1.0, 5.0), uniform(rng, 0.1, 3.0)});
  const int K = static_cast<int>(p.candidates.size());
  for (int x = 0; x < K; ++x)
    for (int y = x + 1; y < K; ++y) {
      const auto& tx = p.candidates[x].triple;
      const auto& ty = p.candidates[y].triple;
      if ((tx.pu == ty.pu && tx.channel == ty.channel) || (tx.channel == ty.channel && bernoulli(rng, 0.3))) {
        p.add_conflict(x, y);
      }
    }
  return p;
}

double objective_of(const AssignmentProblem& p, const Assignment& a) {
  double w = 0.0;
  for (int k : a.indices) w += p.candidates[k].weight;
  return w;
}

}  // namespace

TEST_CASE("inner optimal volume") {
  CHECK(*inner_optimal_volume(1.0, 0.1, 1.0, 5.0, 0.0, 100.0) == doctest::Approx(5.0));
  // grid search over Q in [0, 100]
  double best_q = 0.0, best_v = -1e300;
  for (int k = 0; k <= 100000; ++k) {
    const double q = k * 1e-3;
    const double v = std::log(5.0 + q) - 0.1 * q;
    if (v > best_v) best_v = v, best_q = q;
  }
  CHECK(best_q == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(*inner_optimal_volume(1.0, 0.1, 0.5, 5.0, 8.0, 100.0) == doctest::Approx(16.0));  // q_min / a
  CHECK(*inner_optimal_volume(1.0, 0.1, 0.5, 5.0, 0.0, 2.0) == doctest::Approx(4.0));     // q_cap / a
  CHECK_FALSE(inner_optimal_volume(1.0, 0.1, 1.0, 5.0, 3.0, 2.0).has_value());
}

TEST_CASE("inner optimal volume matches a grid search") {
  Rng rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    const double rho = uniform_open_closed(rng, 0.0, 1.0), p = uniform(rng, 0.01, 1.0);
    const double a = uniform_open_closed(rng, 0.3, 1.0), q0 = uniform(rng, 0.0, 10.0);
    const double lo = uniform(rng, 0.0, 3.0), hi = lo + uniform(rng, 0.0, 20.0);
    const double q = *inner_optimal_volume(rho, p, a, q0, lo, hi);
    auto f = [&](double aq) { return rho * std::log(q0 + aq) - p * aq; };
    double best = -1e300;
    for (int k = 0; k <= 100000; ++k) best = std::max(best, f(lo + (hi - lo) * k / 100000.0));
    CHECK(f(a * q) >= best - 1e-4 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("solver basics") {
  AssignmentProblem empty;
  CHECK(solve_exact(empty).chosen.empty());
  CHECK(solve_exact(empty).objective == 0.0);
  CHECK(enumerate_oracle(empty).chosen.empty());

  AssignmentProblem two;
  two.n_su = 2;
  two.n_pu = 1;
  two.pu_budget = {kUnbounded};
  two.add({{0, 0, 0}, 3.0, 1.0});
  two.add({{1, 0, 0}, 5.0, 1.0});
  two.add_conflict(0, 1);
  const auto a = solve_exact(two);
  REQUIRE(a.chosen.size() == 1);
  CHECK(a.chosen[0] == Triple{1, 0, 0});
  CHECK(a.objective == doctest::Approx(5.0));

  AssignmentProblem one;
  one.n_su = 1;
  one.n_pu = 1;
  one.pu_budget = {kUnbounded};
  one.add({{0, 0, 0}, 2.0, 1.0});
  CHECK(enumerate_oracle(one).chosen.size() == 1);
}

TEST_CASE("ties resolve to the lexicographically smallest set") {
  AssignmentProblem p;
  p.n_su = 2;
  p.n_pu = 2;
  p.pu_budget = {kUnbounded, kUnbounded};
  p.add({{1, 1, 0}, 2.0, 1.0});
  p.add({{0, 0, 0}, 2.0, 1.0});
  p.add_conflict(0, 1);
  const auto a = solve_exact(p);
  REQUIRE(a.chosen.size() == 1);
  CHECK(a.chosen[0] == Triple{0, 0, 0});
}

TEST_CASE("budgets bind") {
  AssignmentProblem p;
  p.n_su = 2;
  p.n_pu = 1;
  p.pu_budget = {3.0};
  p.add({{0, 0, 0}, 2.0, 2.0});
  p.add({{1, 0, 1}, 2.5, 2.0});
  const auto a = solve_exact(p);
  CHECK(a.chosen.size() == 1);
  CHECK(a.objective == doctest::Approx(2.5));
}

TEST_CASE("solver agrees with oracle and brute force on random problems") {
  Rng rng(42);
  for (int rep = 0; rep < 150; ++rep) {
    const int n = 1 + uniform_int(rng, 5), m = 1 + uniform_int(rng, 3), b = 1 + uniform_int(rng, 2);
    const auto p = random_problem(rng, n, m, b, 0.4);
    if (p.candidates.size() > 16) continue;
    const auto ex = solve_exact(p);
    const auto orc = enumerate_oracle(p);
    const double bf = brute_force(p);
    CHECK(ex.objective == doctest::Approx(bf).epsilon(1e-9));
    CHECK(orc.objective == doctest::Approx(bf).epsilon(1e-9));
    CHECK(assignment_feasible(p, ex.indices));
    CHECK(objective_of(p, ex) == doctest::Approx(ex.objective));
  }
}

TEST_CASE("removing a candidate never raises the optimum") {
  Rng rng(8);
  for (int rep = 0; rep < 60; ++rep) {
    const auto p = random_problem(rng, 4, 2, 2, 0.6);
    if (p.candidates.empty()) continue;
    const int drop = uniform_int(rng, static_cast<int>(p.candidates.size()));
    AssignmentProblem q;
    q.n_su = p.n_su;
    q.n_pu = p.n_pu;
    q.pu_budget = p.pu_budget;
    std::vector<int> map(p.candidates.size(), -1);
    for (int k = 0; k < static_cast<int>(p.candidates.size()); ++k)
      if (k != drop) map[k] = q.add(p.candidates[k]);
    for (int k = 0; k < static_cast<int>(p.candidates.size()); ++k)
      for (int c : p.conflicts[k])
        if (map[k] >= 0 && map[c] >= 0 && k < c) q.add_conflict(map[k], map[c]);
    CHECK(solve_exact(q).objective <= solve_exact(p).objective + 1e-12);
  }
}

TEST_CASE("centralized problems from scenarios") {
  SUBCASE("SU out of range has no candidates") {
    const auto s = make_scenario({su_at(0, 0, 0), su_at(1, 900, 900)}, {pu_at(0, 10, 0)}, 1);
    const LinkModel links(s);
    const auto p = build_centralized_problem(s, links, 0.1, TrustState::uniform(2, 1, 1.0), {9.0});
    for (const auto& c : p.candidates) CHECK(c.triple.su == 0);
  }
  SUBCASE("single feasible link") {
    const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 10, 0)}, 1);
    const LinkModel links(s);
    const auto p = build_centralized_problem(s, links, 0.1, TrustState::uniform(1, 1, 1.0), {9.0});
    CHECK(p.candidates.size() == 1);
  }
  SUBCASE("two SUs on one (PU, channel) conflict") {
    const auto s = make_scenario({su_at(0, 0, 0), su_at(1, 20, 0)}, {pu_at(0, 10, 0)}, 1);
    const LinkModel links(s);
    const auto p = build_centralized_problem(s, links, 0.1, TrustState::uniform(2, 1, 1.0), {9.0});
    REQUIRE(p.candidates.size() == 2);
    CHECK(std::find(p.conflicts[0].begin(), p.conflicts[0].end(), 1) != p.conflicts[0].end());
    CHECK(std::find(p.conflicts[1].begin(), p.conflicts[1].end(), 0) != p.conflicts[1].end());
  }
}

TEST_CASE("scenario solutions are feasible and within budgets") {
  Rng rng(19);
  for (int rep = 0; rep < 60; ++rep) {
    const auto s = random_scenario(rng, 1 + uniform_int(rng, 6), 1 + uniform_int(rng, 3), 1 + uniform_int(rng, 3));
    const LinkModel links(s);
    std::vector<double> avail;
    for (const auto& pu : s.pus) avail.push_back(pu.q0 - 1e-6);
    const auto p = build_centralized_problem(s, links, uniform(rng, 0.05, 1.0), TrustState::uniform(s.n(), s.m(), 1.0),
                                             avail);
    const auto a = solve_exact(p);
    CHECK(a.objective == doctest::Approx(enumerate_oracle(p).objective).epsilon(1e-9));
    TradingTopology t;
    for (int k : a.indices) {
      const auto& c = p.candidates[k];
      t.add(c.triple, c.volume / s.a(c.triple.su, c.triple.pu, c.triple.channel), 0.1);
    }
    CHECK(check_feasible(t, s));
    CHECK(check_budgets(t, s));
  }
}

TEST_CASE("channel assignment") {
  const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 10, 0)}, 2, 0.9);
  const auto trust = TrustState::uniform(1, 1, 1.0);
  SUBCASE("positive net utility is assigned") {
    const auto a = solve_channel_assignment(s, {{0, 0, 2.0, 0.1}}, 0.1, trust);
    CHECK(a.chosen.size() == 1);
  }
  SUBCASE("all channels negative stay unassigned") {
    const auto a = solve_channel_assignment(s, {{0, 0, 2.0, 50.0}}, 0.1, trust);
    CHECK(a.chosen.empty());
  }
  SUBCASE("matches a per-channel enumeration") {
    Rng rng(4);
    for (int rep = 0; rep < 40; ++rep) {
      const auto sc = random_scenario(rng, 4, 2, 3);
      std::vector<AgreedPair> pairs;
      for (int i = 0; i < sc.n(); ++i)
        if (bernoulli(rng, 0.8)) pairs.push_back({i, uniform_int(rng, sc.m()), uniform(rng, 0.5, 4.0), uniform(rng, 0.0, 0.5)});
      const auto tr = TrustState::uniform(sc.n(), sc.m(), 1.0);
      const LinkModel links(sc);
      const auto prob = build_channel_problem(sc, links, pairs, 0.1, tr);
      CHECK(solve_channel_assignment(sc, pairs, 0.1, tr).objective == doctest::Approx(brute_force(prob)).epsilon(1e-9));
    }
  }
}
