#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cdna/net_model.hpp"
#include "fixtures.hpp"

using namespace cdna;
using namespace cdna::testing;

TEST_CASE("path gain") {
  RadioParams r;
  CHECK(path_gain(1.0, r) == doctest::Approx(62.5));
  CHECK(path_gain(500.0, r) == doctest::Approx(62.5 / std::pow(500.0, 4)).epsilon(1e-12));
  CHECK(path_gain(500.0, r) == doctest::Approx(1.0e-9).epsilon(1e-12));
  CHECK(path_gain(250.0, r) == doctest::Approx(1.6e-8).epsilon(1e-12));
  CHECK_THROWS_AS(path_gain(0.0, r), std::domain_error);
  CHECK_THROWS_AS(path_gain(-1.0, r), std::domain_error);
}

TEST_CASE("path gain and capacity decrease with distance") {
  RadioParams r;
  double prev_g = path_gain(1.0, r), prev_c = link_capacity(1.0, r);
  for (double d = 2.0; d < 2000.0; d *= 1.07) {
    const double g = path_gain(d, r), c = link_capacity(d, r);
    CHECK(g < prev_g);
    CHECK(c < prev_c);
    CHECK(c >= 0.0);
    prev_g = g;
    prev_c = c;
  }
}

TEST_CASE("ranges") {
  RadioParams r;
  CHECK(transmission_range(r) == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(interference_range(r) == doctest::Approx(500.0).epsilon(1e-12));
  RadioParams unit;
  unit.beta = 1.0;
  unit.tx_power_ratio = unit.rx_threshold_ratio = 3.0;
  for (double alpha : {1.0, 2.5, 4.0}) {
    unit.alpha = alpha;
    CHECK(transmission_range(unit) == doctest::Approx(1.0));
  }
}

TEST_CASE("capacity and volume") {
  RadioParams r;
  // P g / γ = 8.1e9 · 1e-9 = 8.1 at 500 m
  CHECK(link_capacity(500.0, r) == doctest::Approx(std::log2(9.1)).epsilon(1e-12));
  CHECK(link_capacity(500.0, r) == doctest::Approx(3.1859).epsilon(1e-4));
  CHECK(link_capacity(250.0, r) == doctest::Approx(std::log2(130.6)).epsilon(1e-12));
  CHECK(link_capacity(250.0, r) == doctest::Approx(7.029).epsilon(1e-3));
  CHECK_THROWS_AS(link_capacity(0.0, r), std::domain_error);
  CHECK(data_volume(3.1859, 0.0) == 0.0);
  CHECK(data_volume(3.1859, 10.0) == doctest::Approx(31.859));
  CHECK(data_volume(0.0, 5.0) == 0.0);
  const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 0, 0)}, 1);
  CHECK_THROWS_AS(link_capacity(s, 0, 0), std::domain_error);
}

TEST_CASE("candidate PUs") {
  SUBCASE("boundary") {
    const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 0, 400), pu_at(1, 0, 501), pu_at(2, 0, 500)}, 1);
    CHECK(candidate_pus(s, 0, 0) == std::vector<int>{0, 2});
  }
  SUBCASE("distance filter") {
    const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 100, 0), pu_at(1, 499, 0), pu_at(2, 600, 0)}, 1);
    CHECK(candidate_pus(s, 0, 0).size() == 2);
  }
  SUBCASE("channel availability") {
    auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 100, 0)}, 2);
    s.availability.set(0, 0, 1, 0.0);
    CHECK(candidate_pus(s, 0, 0).size() == 1);
    CHECK(candidate_pus(s, 0, 1).empty());
  }
}

TEST_CASE("interferers") {
  SUBCASE("single SU") {
    const auto s = make_scenario({su_at(0, 0, 0)}, {pu_at(0, 100, 0), pu_at(1, 900, 900)}, 1);
    CHECK(interferers(s, 1, 0).empty());
  }
  SUBCASE("SU with a transmit opportunity is included") {
    const auto s = make_scenario({su_at(0, 0, 0), su_at(1, 300, 0)}, {pu_at(0, 0, 0.5), pu_at(1, 600, 0)}, 1);
    const auto I = interferers(s, 0, 0);
    CHECK(std::find(I.begin(), I.end(), 1) != I.end());
  }
  SUBCASE("SU without any reachable PU on b is excluded") {
    auto s = make_scenario({su_at(0, 0, 0), su_at(1, 300, 0)}, {pu_at(0, 0, 1), pu_at(1, 600, 0)}, 2);
    s.availability.set(1, 0, 1, 0.0);
    s.availability.set(1, 1, 1, 0.0);
    const auto I = interferers(s, 0, 1);
    CHECK(std::find(I.begin(), I.end(), 1) == I.end());
  }
}

TEST_CASE("interferer sets are consistent with the interference range") {
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const auto s = random_scenario(rng, 5, 3, 3, 1200.0);
    const double R = interference_range(s.radio);
    for (int j = 0; j < s.m(); ++j)
      for (int b = 0; b < s.channels; ++b)
        for (int k : interferers(s, j, b)) CHECK(s.su_pu_distance(k, j) <= R * (1 + 1e-12));
  }
}

TEST_CASE("check_feasible") {
  const auto s = make_scenario({su_at(0, 0, 0), su_at(1, 10, 0)}, {pu_at(0, 0, 10), pu_at(1, 10, 10)}, 2);
  TradingTopology t;
  CHECK(check_feasible(t, s));

  SUBCASE("same (PU, channel) twice") {
    t.add({0, 0, 0}, 1.0, 0.1);
    t.add({1, 0, 0}, 1.0, 0.1);
    CHECK_FALSE(check_feasible(t, s));
  }
  SUBCASE("co-channel interferer") {
    t.add({0, 0, 0}, 1.0, 0.1);
    t.add({1, 1, 0}, 1.0, 0.1);
    CHECK_FALSE(check_feasible(t, s));
  }
  SUBCASE("separate channels") {
    t.add({0, 0, 0}, 1.0, 0.1);
    t.add({1, 1, 1}, 1.0, 0.1);
    CHECK(check_feasible(t, s));
    CHECK(check_budgets(t, s));
  }
  SUBCASE("SU twice") {
    t.add({0, 0, 0}, 1.0, 0.1);
    t.add({0, 1, 1}, 1.0, 0.1);
    CHECK_FALSE(check_feasible(t, s));
  }
  SUBCASE("budget") {
    t.add({0, 0, 0}, 11.0, 0.1);
    CHECK_FALSE(check_budgets(t, s));
  }
}

TEST_CASE("QoS gate drops links whose capacity is below c_min") {
  auto s = make_scenario({su_at(0, 0, 0, 20.0)}, {pu_at(0, 0, 100)}, 1);
  const LinkModel links(s);
  CHECK_FALSE(links.link_usable(0, 0, 0));
  TradingTopology t;
  t.add({0, 0, 0}, 1.0, 0.1);
  CHECK_FALSE(check_feasible(t, s));
}

TEST_CASE("adding a triple never repairs an infeasible topology") {
  Rng rng(11);
  for (int rep = 0; rep < 60; ++rep) {
    const auto s = random_scenario(rng, 5, 3, 2);
    TradingTopology t;
    for (int k = 0; k < 6; ++k) {
      const Triple x{uniform_int(rng, s.n()), uniform_int(rng, s.m()), uniform_int(rng, s.channels)};
      const bool before = check_feasible(t, s);
      t.triples.push_back(x);
      if (!before) CHECK_FALSE(check_feasible(t, s));
    }
  }
}

TEST_CASE("scenario validation") {
  CHECK_THROWS(make_scenario({}, {pu_at(0, 0, 0)}, 1));
  CHECK_THROWS(make_scenario({su_at(0, 0, 0)}, {pu_at(0, 0, 0)}, 0));
  CHECK_THROWS(make_scenario({su_at(0, -1, 0)}, {pu_at(0, 0, 0)}, 1));
  CHECK_THROWS(make_scenario({su_at(0, 0, 0), su_at(0, 1, 0)}, {pu_at(0, 0, 0)}, 1));
  AvailabilityMap a(1, 1, 1);
  CHECK_THROWS(a.set(0, 0, 0, 1.5));
  CHECK_THROWS(a.at(1, 0, 0));
}
