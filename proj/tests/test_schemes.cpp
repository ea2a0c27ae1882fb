#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cdna/schemes.hpp"
#include "fixtures.hpp"

using namespace cdna;
using namespace cdna::testing;

TEST_CASE("centralized utilities") {
  CHECK(su_utility_centralized(1.0, 1.0, 0.0) == 0.0);
  CHECK(su_utility_centralized(0.5, 1.0, std::numbers::e - 1.0) == doctest::Approx(0.5));
  CHECK(su_utility_centralized(0.9, 10.0, 5.0) == doctest::Approx(0.9 * std::log(15.0)));
  CHECK(su_utility_centralized(0.9, 10.0, 5.0) == doctest::Approx(2.4373).epsilon(1e-4));
  CHECK_THROWS_AS(su_utility_centralized(1.0, 0.0, 0.0), std::domain_error);
  CHECK(pu_reward_centralized(0.7, 10.0, 5.0, 10.0) == doctest::Approx(3.5));
  CHECK(pu_reward_centralized(0.0, 10.0, 5.0, 10.0) == 0.0);
  CHECK(pu_reward_centralized(0.7, 10.0, 0.0, 10.0) == 0.0);
  CHECK_THROWS_AS(pu_reward_centralized(0.7, 10.0, 5.0, 0.0), std::domain_error);
}

TEST_CASE("closed-form agreement price") {
  CHECK(closed_form_price(1.0, 1.0, std::numbers::e - 1.0, 0.0, 5.0, 10.0) ==
        doctest::Approx(0.5 / (std::numbers::e - 1.0)));
  CHECK(closed_form_price(1.0, 1.0, std::numbers::e - 1.0, 0.0, 5.0, 10.0) == doctest::Approx(0.29099).epsilon(1e-4));
  CHECK(closed_form_price(0.0, 1.0, 2.0, 0.7, 10.0, 10.0) == doctest::Approx(0.35));
  CHECK_THROWS(closed_form_price(1.0, 1.0, 0.0, 0.7, 10.0, 10.0));
}

TEST_CASE("negotiate_price settles on a decreasing gap") {
  auto gap = [](double p) { return 3.0 - 2.0 * p; };
  for (bool adaptive : {false, true}) {
    const auto r = negotiate_price(gap, 0.1, 0.01, 1e-4, 10000, adaptive);
    CHECK(r.converged);
    CHECK(std::abs(gap(r.price)) <= 1e-4);
    CHECK(r.price == doctest::Approx(1.5).epsilon(1e-4));
  }
  // A gap that never reaches zero pins the price at the bound.
  const auto pinned = negotiate_price([](double) { return 1.0; }, 0.5, 0.1, 1e-4, 100, true, 0.0, 2.0);
  CHECK_FALSE(pinned.converged);
  CHECK(pinned.price == 2.0);
}

TEST_CASE("single link negotiation reaches the closed-form price") {
  Rng rng(17);
  NegotiationConfig cfg;
  cfg.adaptive_steps = false;
  for (int rep = 0; rep < 50; ++rep) {
    const double rho = uniform_open_closed(rng, 0.2, 1.0), q0 = uniform(rng, 1.0, 10.0);
    const double q = uniform(rng, 0.5, 5.0), eta = uniform(rng, 0.1, 0.9);
    const double plan = uniform(rng, 1.0, 10.0), qa = uniform(rng, q, 10.0);
    const auto m = single_link_market(rho, q0, q, eta, plan, qa);
    const double ps = closed_form_price(rho, q0, q, eta, plan, qa);
    // ΔU is decreasing on a grid around the agreement point
    double prev = m.gap(0, 1e-3, 1.0);
    for (int k = 1; k <= 1000; ++k) {
      const double g = m.gap(0, 1e-3 + k * 4.0 * ps / 1000.0, 1.0);
      CHECK(g < prev);
      prev = g;
    }
    const auto r = negotiate_centralized(m, cfg);
    CHECK(r.agreed);
    CHECK(std::abs(r.prices[0] - ps) <= 2.0 * cfg.dp);
  }
}

TEST_CASE("centralized scheme") {
  SUBCASE("no feasible links") {
    const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 900, 900)}, 1);
    const auto out = run_centralized(s, TrustState::uniform(1, 1, 1.0), {});
    CHECK(out.topology.empty());
    CHECK(out.u_so == 0.0);
    CHECK(out.u_po == 0.0);
    CHECK(out.converged);
  }
  SUBCASE("random scenarios meet the agreement band and stay feasible") {
    Rng rng(23);
    for (int rep = 0; rep < 25; ++rep) {
      const auto s = random_scenario(rng, 2 + uniform_int(rng, 5), 1 + uniform_int(rng, 3), 1 + uniform_int(rng, 3));
      const auto trust = TrustState::uniform(s.n(), s.m(), 1.0);
      for (bool per_link : {true, false}) {
        NegotiationConfig cfg;
        cfg.per_link_prices = per_link;
        const auto out = run_centralized(s, trust, {}, cfg);
        CHECK(check_feasible(out.topology, s));
        CHECK(check_budgets(out.topology, s));
        if (out.converged && !out.topology.empty()) CHECK(std::abs(out.u_so - out.u_po) <= cfg.chi);
      }
    }
  }
  SUBCASE("each inner solve is optimal for its prices") {
    Rng rng(29);
    for (int rep = 0; rep < 20; ++rep) {
      const auto s = random_scenario(rng, 4, 2, 2);
      const LinkModel links(s);
      const auto m = build_centralized_market(s, links, TrustState::uniform(4, 2, 1.0), {}, {});
      std::vector<double> prices;
      for (int k = 0; k < m.size(); ++k) prices.push_back(uniform(rng, 0.05, 2.0));
      const auto ev = evaluate_centralized(m, prices);
      CHECK(ev.assignment.objective == doctest::Approx(enumerate_oracle(ev.problem).objective).epsilon(1e-9));
    }
  }
}

TEST_CASE("hybrid SU and PU decisions") {
  const auto d = su_solve_hybrid(1.0, 0.1, 5.0, 0.0, 100.0);
  CHECK(d.trade);
  CHECK(d.volume == doctest::Approx(5.0));
  CHECK_FALSE(su_solve_hybrid(1.0, 0.1, 5.0, 10.0, 5.0).trade);
  const auto pricey = su_solve_hybrid(1.0, 50.0, 5.0, 1.0, 10.0);
  CHECK(pricey.volume == doctest::Approx(1.0));
  CHECK_FALSE(pricey.trade);

  // SU utility is concave in Q: non-positive second differences
  for (double q = 0.1; q < 20.0; q += 0.1) {
    auto u = [](double x) { return std::log(5.0 + x) - 0.1 * x; };
    CHECK(u(q + 0.1) - 2 * u(q) + u(q - 0.1) <= 0.0);
  }

  const double interior = 10.0 - 1.0 / 0.14;
  auto s1 = pu_solve_hybrid({{0, 1.0, 0.0, 100.0}}, 0.2, 0.7, 0.0, 10.0, 100.0);
  CHECK(s1[0] == doctest::Approx(interior));
  auto s2 = pu_solve_hybrid({{0, 1.0, 0.0, 1.0}}, 0.2, 0.7, 0.0, 10.0, 100.0);
  CHECK(s2[0] == doctest::Approx(1.0));  // clamped to demand
  auto s3 = pu_solve_hybrid({{0, 1.0, 0.5, 3.0}}, 0.01, 0.7, 0.0, 10.0, 100.0);
  CHECK(s3[0] == doctest::Approx(0.5));  // interior below zero, floor wins
  auto two = pu_solve_hybrid({{0, 1.0, 0.0, 3.0}, {1, 1.0, 0.0, 3.0}}, 1.0, 0.7, 0.0, 10.0, 4.0);
  CHECK(two[0] + two[1] == doctest::Approx(4.0));
}

TEST_CASE("hybrid scheme") {
  SUBCASE("no feasible pairs") {
    const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 900, 900)}, 1);
    const auto out = run_hybrid(s, TrustState::uniform(1, 1, 1.0), {});
    CHECK(out.topology.empty());
    CHECK(trading_efficiency(out) == 1.0);
  }
  SUBCASE("pairs meet the user agreement band") {
    Rng rng(31);
    NegotiationConfig cfg;
    for (int rep = 0; rep < 25; ++rep) {
      const auto s = random_scenario(rng, 2 + uniform_int(rng, 5), 1 + uniform_int(rng, 3), 1 + uniform_int(rng, 3));
      const auto out = run_hybrid(s, TrustState::uniform(s.n(), s.m(), 1.0), {}, cfg);
      CHECK(check_feasible(out.topology, s));
      CHECK(out.max_pair_gap <= cfg.chi_prime);
      const double eff = trading_efficiency(out);
      CHECK(eff >= 0.0);
      CHECK(eff <= 1.0 + 1e-12);
    }
  }
  SUBCASE("different QoS floors give different data prices") {
    const auto s = make_scenario({su_at(0, 0, 0, 2.0, 9.0, 10.0), su_at(1, 5, 0, 1.0, 1.0, 4.0)}, {pu_at(0, 10, 0)}, 2);
    const auto trust = TrustState::uniform(2, 1, 1.0);
    const auto a = negotiate_pair(s, trust, {}, 0, 0, 9.0, {});
    const auto b = negotiate_pair(s, trust, {}, 1, 0, 9.0, {});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->pi != doctest::Approx(b->pi));
  }
}

TEST_CASE("trading efficiency") {
  SchemeOutcome o;
  CHECK(trading_efficiency(o) == 1.0);
  o.agreed_q = 10.0;
  o.total_q = 6.0;
  CHECK(trading_efficiency(o) == doctest::Approx(0.6));
  o.total_q = 0.0;
  CHECK(trading_efficiency(o) == 0.0);
}
