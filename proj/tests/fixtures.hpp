// Small hand-built scenarios shared by the unit tests.
#pragma once

#include <utility>
#include <vector>

#include "cdna/net_model.hpp"
#include "cdna/rng.hpp"

namespace cdna::testing {

inline Node su_at(int id, double x, double y, double c_min = 1.0, double tau = 5.0, double q0 = 10.0) {
  Node n;
  n.id = id;
  n.kind = NodeKind::kSU;
  n.position = {x, y};
  n.q0 = q0;
  n.c_min = c_min;
  n.tau_min = tau;
  return n;
}

inline Node pu_at(int id, double x, double y, double q0 = 10.0, double plan_price = 2.0, double e = 0.01) {
  Node n;
  n.id = id;
  n.kind = NodeKind::kPU;
  n.position = {x, y};
  n.q0 = q0;
  n.plan_price = plan_price;
  n.energy_cost = e;
  return n;
}

/// Scenario with every (su, pu, channel) at availability `a`.
inline NetworkScenario make_scenario(std::vector<Node> sus, std::vector<Node> pus, int channels, double a = 1.0) {
  NetworkScenario s;
  s.sus = std::move(sus);
  s.pus = std::move(pus);
  s.channels = channels;
  s.availability = AvailabilityMap(s.n(), s.m(), channels);
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.m(); ++j)
      for (int b = 0; b < channels; ++b) s.availability.set(i, j, b, a);
  s.validate();
  return s;
}

/// Random scenario in a square small enough that most nodes are in range.
inline NetworkScenario random_scenario(Rng& rng, int n, int m, int b, double side = 700.0) {
  std::vector<Node> sus, pus;
  for (int i = 0; i < n; ++i)
    sus.push_back(su_at(i, uniform(rng, 0, side), uniform(rng, 0, side), uniform(rng, 1.5, 6.0),
                        uniform_open_closed(rng, 0.0, 10.0)));
  for (int j = 0; j < m; ++j) pus.push_back(pu_at(j, uniform(rng, 0, side), uniform(rng, 0, side)));
  NetworkScenario s;
  s.sus = std::move(sus);
  s.pus = std::move(pus);
  s.channels = b;
  s.width = s.height = side;
  s.availability = AvailabilityMap(n, m, b);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < b; ++c) s.availability.set(i, j, c, uniform_open_closed(rng, 0.5, 1.0));
  s.validate();
  return s;
}

}  // namespace cdna::testing
