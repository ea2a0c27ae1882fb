#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cdna/trust.hpp"

using namespace cdna;

TEST_CASE("reliability ratio") {
  CHECK(reliability(3.0, 3.0) == 1.0);
  CHECK(reliability(0.0, 3.0) == 0.0);
  CHECK(reliability(2.4, 3.0) == doctest::Approx(0.8));
  CHECK(reliability(5.0, 3.0) == 1.0);
  CHECK_THROWS_AS(reliability(1.0, 0.0), std::domain_error);
  CHECK(update_reliability(0.5, 1.0, 0.3) == doctest::Approx(0.65));
}

TEST_CASE("direct observation sigmoid") {
  CHECK(direct_observation(0.8, 1.0, 20, 0.8) == doctest::Approx(0.5));
  CHECK(direct_observation(1.0, 1.0, 20, 0.8) == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))));
  CHECK(direct_observation(1.0, 1.0, 20, 0.8) == doctest::Approx(0.9820).epsilon(1e-4));
  CHECK(direct_observation(0.5, 1.0, 20, 0.8) == doctest::Approx(1.0 / (1.0 + std::exp(6.0))));
  CHECK(direct_observation(0.5, 1.0, 20, 0.8) == doctest::Approx(0.00247).epsilon(1e-3));

  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const double xi_i = uniform(rng, 0, 1), phi = uniform(rng, 0.1, 1), h = uniform(rng, 1, 40);
    const double ref = phi * xi_i, d = uniform(rng, 0.001, 0.5);
    CHECK(direct_observation(ref, xi_i, h, phi) == doctest::Approx(0.5));
    // symmetric about the reference point and increasing
    CHECK(0.5 - direct_observation(ref - d, xi_i, h, phi) ==
          doctest::Approx(direct_observation(ref + d, xi_i, h, phi) - 0.5));
    CHECK(direct_observation(ref + d, xi_i, h, phi) > direct_observation(ref, xi_i, h, phi));
  }
}

TEST_CASE("credibility") {
  CHECK(credibility(5, 5) == 1.0);
  CHECK(credibility(0, 5) == 0.0);
  CHECK(credibility(3, 12) == doctest::Approx(0.25));
  CHECK(credibility(3, 12, true) == doctest::Approx(3.0 / 15.0));
  CHECK_THROWS_AS(credibility(-1, 3), std::invalid_argument);

  TrustState st(1, 4);
  const int counts[] = {3, 0, 5, 4};
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < counts[j]; ++k) st.add_transaction(0, j);
  double sum = 0.0;
  for (int j = 0; j < 4; ++j) sum += credibility(st.transactions(0, j), st.su_transactions(0));
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("similarity") {
  const ProfileRanges r{4.0, 10.0};
  CHECK(similarity({2, 3}, {2, 3}, r) == 1.0);
  CHECK(similarity({2, 0}, {6, 10}, r) == 0.0);
  CHECK(similarity({2, 3}, {4, 3}, r) == doctest::Approx(0.5));
  CHECK(similarity({2, 3}, {2, 3}, ProfileRanges{}) == 1.0);
  const auto pr = profile_ranges({{2, 1}, {5, 4}, {3, 9}});
  CHECK(pr.c_span == doctest::Approx(3.0));
  CHECK(pr.tau_span == doctest::Approx(8.0));
}

TEST_CASE("indirect recommendation and trustworthiness") {
  CHECK(indirect_recommendation({}) == 0.0);
  CHECK(indirect_recommendation({{1, 1, 0.9}}) == doctest::Approx(0.9));
  CHECK(indirect_recommendation({{0.5, 0.4, 0.8}, {1, 0.6, 0.5}}) == doctest::Approx(0.46));
  CHECK(trustworthiness(0.9, 0.4, 1.0) == doctest::Approx(0.9));
  CHECK(trustworthiness(0.9, 0.4, 0.0) == doctest::Approx(0.4));
  CHECK(trustworthiness(0.9, 0.4, 0.7) == doctest::Approx(0.75));
  CHECK_THROWS_AS(trustworthiness(0.9, 0.4, 1.5), std::invalid_argument);
}

TEST_CASE("access control shares") {
  CHECK(access_control_shares(TrustState::uniform(3, 2, 1.0)).eta == std::vector<double>{1.0, 1.0});
  CHECK(access_control_shares(TrustState::uniform(3, 2, 1.0)).sigma == std::vector<double>(3, 1.0));

  TrustState st = TrustState::uniform(2, 1, 1.0);
  st.set_su_to_pu(0, 0, 0.6);
  st.set_su_to_pu(1, 0, 0.8);
  CHECK(access_control_shares(st).eta[0] == doctest::Approx(0.7));

  // Only observed pairs count once history exists.
  st.add_transaction(1, 0);
  CHECK(access_control_shares(st).eta[0] == doctest::Approx(0.8));

  TrustState low = TrustState::uniform(2, 2, 0.9);
  low.set_pu_to_su(0, 1, 0.1);
  low.set_pu_to_su(1, 1, 0.2);
  const auto sh = access_control_shares(low);
  CHECK(sh.excluded_sus == std::set<int>{1});
  CHECK(sh.excluded_pus.empty());
  CHECK_FALSE(low.admitted(1, 0));
  CHECK(low.admitted(0, 0));

  // Raising every ρ toward PU j weakly raises η_j.
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    TrustState a(4, 3);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j) a.set_su_to_pu(i, j, uniform(rng, 0, 0.9));
    auto b = a;
    for (int i = 0; i < 4; ++i) b.set_su_to_pu(i, 1, a.su_to_pu(i, 1) + uniform(rng, 0, 0.1));
    CHECK(access_control_shares(b).eta[1] >= access_control_shares(a).eta[1]);
  }
}

TEST_CASE("trust stays in [0,1] and the two directions are independent") {
  Rng rng(13);
  TrustState st(4, 3);
  std::vector<QosProfile> prof;
  for (int i = 0; i < 4; ++i) prof.push_back({uniform(rng, 2, 6), uniform(rng, 0, 10)});
  const TrustModel model(prof);
  for (int step = 0; step < 40; ++step) {
    const int i = uniform_int(rng, 4), j = uniform_int(rng, 3);
    st.add_transaction(i, j);
    st.set_su_reliability(i, update_reliability(st.su_reliability(i), uniform(rng, 0.5, 1), 0.3));
    st.set_pu_reliability(j, update_reliability(st.pu_reliability(j), uniform(rng, 0.5, 1), 0.3));
    model.recompute_all(st);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 3; ++b) {
        CHECK(st.su_to_pu(a, b) >= 0.0);
        CHECK(st.su_to_pu(a, b) <= 1.0);
        CHECK(st.pu_to_su(b, a) >= 0.0);
        CHECK(st.pu_to_su(b, a) <= 1.0);
      }
  }
  // Editing one direction leaves the other alone.
  const double back = st.pu_to_su(0, 0);
  st.set_su_to_pu(0, 0, 0.123);
  CHECK(st.pu_to_su(0, 0) == back);
}

TEST_CASE("autonomous evaluation") {
  // No chains: identical to the full evaluation.
  TrustState st(2, 2);
  st.add_transaction(0, 0);
  const TrustModel model({{3, 5}, {3, 5}});
  CHECK(model.autonomous_su_to_pu(st, 0, 1) == doctest::Approx(model.su_to_pu(st, 0, 1).rho));

  // One chain 0 -> PU1 -> 1, peer 1 trusts PU0 with 0.8; ω = 0 isolates the
  // recommendation term, S = 1 and C = 1/2.
  TrustState c(2, 2);
  c.params().omega = 0.0;
  c.add_transaction(0, 1);
  c.add_transaction(1, 1);
  c.add_transaction(1, 0);
  c.set_su_to_pu(1, 0, 0.8);
  CHECK(model.autonomous_su_to_pu(c, 0, 0) == doctest::Approx(1.0 * 0.5 * 0.8));
  c.params().omega = 1.0;
  CHECK(model.autonomous_su_to_pu(c, 0, 0) ==
        doctest::Approx(direct_observation(c.pu_reliability(0), c.su_reliability(0), 20, 0.8)));
}

TEST_CASE("behavior draws") {
  Node good, bad;
  good.reliability_prob = 1.0;
  bad.reliability_prob = 0.5;
  Rng rng(1), rng2(1);
  for (int k = 0; k < 1000; ++k) {
    const double g = sample_behavior(good, rng).delivered_fraction;
    const double b = sample_behavior(bad, rng).delivered_fraction;
    CHECK(g >= 0.9);
    CHECK(g <= 1.0);
    CHECK(b >= 0.5);
    CHECK(b < 0.9);
    CHECK(sample_behavior(good, rng2).delivered_fraction == g);
    CHECK(sample_behavior(bad, rng2).delivered_fraction == b);
  }
}

TEST_CASE("trust simulation") {
  TrustSimConfig cfg;
  const auto a = simulate_trust(cfg, 77), b = simulate_trust(cfg, 77);
  CHECK(a.shares.eta == b.shares.eta);
  CHECK(a.mean_eta > 0.0);
  CHECK(a.mean_eta <= 1.0);

  // Reliable PUs end up trusted more than unreliable ones.
  double rel = 0.0, unrel = 0.0;
  for (int j = 0; j < cfg.n_pu; ++j) (j < cfg.n_pu / 2 ? rel : unrel) += a.shares.eta[j];
  CHECK(rel > unrel);

  auto auto_cfg = cfg;
  auto_cfg.autonomous_after = 20;
  const auto c = simulate_trust(auto_cfg, 77);
  CHECK(c.sus.size() == a.sus.size());
  CHECK(std::abs(c.mean_eta - a.mean_eta) <= 0.02);
  CHECK(std::abs(c.mean_sigma - a.mean_sigma) <= 0.02);

  std::ostringstream os;
  write_trust_trace_header(os);
  write_trust_trace(os, 0, a.state, TrustModel({}));
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * cfg.n_su * cfg.n_pu);
}
