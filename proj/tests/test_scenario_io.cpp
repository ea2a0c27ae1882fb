#include <doctest.h>

#include <sstream>

#include "cdna/harness.hpp"
#include "cdna/scenario_io.hpp"

using namespace cdna;

TEST_CASE("scenario files round-trip exactly") {
  ExperimentConfig cfg;
  cfg.n_su = 7;
  cfg.n_pu = 3;
  cfg.n_channels = 4;
  Rng rng(5);
  const auto s = generate_scenario(cfg, rng);
  std::stringstream ss;
  write_scenario(ss, s);
  const auto r = read_scenario(ss);
  REQUIRE(r.n() == s.n());
  REQUIRE(r.m() == s.m());
  CHECK(r.channels == s.channels);
  CHECK(r.volume_scale == s.volume_scale);
  for (int i = 0; i < s.n(); ++i) {
    CHECK(r.sus[i].position.x == s.sus[i].position.x);
    CHECK(r.sus[i].c_min == s.sus[i].c_min);
    CHECK(r.sus[i].tau_min == s.sus[i].tau_min);
    for (int j = 0; j < s.m(); ++j)
      for (int b = 0; b < s.channels; ++b) CHECK(r.a(i, j, b) == s.a(i, j, b));
  }
  std::stringstream again;
  write_scenario(again, r);
  std::stringstream first;
  write_scenario(first, s);
  CHECK(again.str() == first.str());
}

TEST_CASE("malformed scenario files are rejected") {
  auto bad = [](const std::string& text) {
    std::istringstream is(text);
    return read_scenario(is);
  };
  CHECK_THROWS(bad("channels 1\nXU 0 0 0 10 0 1 1 0 1\n"));
  CHECK_THROWS(bad("channels 1\nSU 0 0 0 10 0 1\n"));
  CHECK_THROWS(bad("channels 1\nSU 0 0 0 10 0 1 1 0 1\nPU 0 1 1 10 2 0 0 0.01 1\navail 0 5 0 0.9\n"));
  CHECK_THROWS(bad("channels 1\nSU 0 0 0 10 0 1 1 0 1\nPU 0 1 1 10 2 0 0 0.01 1\navail 0 0 0 1.5\n"));
  CHECK_NOTHROW(bad("# ok\nchannels 1\nSU 0 0 0 10 0 1 1 0 1\nPU 0 1 1 10 2 0 0 0.01 1\navail 0 0 0 0.9\n"));
}
