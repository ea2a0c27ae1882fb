// Exact solver for "pick at most one (PU, channel) per SU" problems under
// pairwise conflicts and per-PU data budgets.
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "cdna/net_model.hpp"
#include "cdna/trust.hpp"

namespace cdna {

struct Candidate {
  Triple triple;
  double weight = 0.0;
  double volume = 0.0;  // effective volume a·Q charged against the PU budget
};

struct AssignmentProblem {
  int n_su = 0;
  int n_pu = 0;
  std::vector<Candidate> candidates;
  /// conflicts[k]: indices of candidates that cannot be chosen together with
  /// candidate k. Two candidates of the same SU always conflict, whether or
  /// not they are listed.
  std::vector<std::vector<int>> conflicts;
  std::vector<double> pu_budget;  // +inf when unconstrained
  bool require_all = false;

  int add(const Candidate& c);
  void add_conflict(int a, int b);
  /// Fills conflicts from the I1/I2 rules of a link model.
  void add_link_conflicts(const LinkModel& links);
  void validate() const;
};

struct Assignment {
  std::vector<Triple> chosen;  // sorted
  std::vector<int> indices;    // candidate indices, same order as chosen
  double objective = 0.0;
  bool feasible = true;        // false only when require_all cannot be met
  long nodes = 0;              // search nodes visited
};

/// Per-link maximizer of ρ·log(q0 + aQ) − p·aQ with q_min ≤ aQ ≤ q_cap.
/// Returns Q (not aQ); nullopt when the bounds are infeasible.
std::optional<double> inner_optimal_volume(double rho, double p, double a, double q0, double q_min, double q_cap);

/// Centralized problem at one uniform price: one candidate per usable, QoS-feasible and
/// trusted (i, j, b), volume at the per-link optimum capped by the PU's
/// available data, weight = ρ log(Q_oi + aQ) − p·aQ. Budgets are q_avail.
/// `allowed(i, j)` filters pairs (defaults to the trust threshold).
AssignmentProblem build_centralized_problem(const NetworkScenario& s, const LinkModel& links, double price,
                                            const TrustState& trust, const std::vector<double>& q_avail,
                                            const std::function<bool(int, int)>& allowed = nullptr);

/// Depth-first branch and bound. Ties within a relative 1e-12 resolve to the
/// lexicographically smallest set of triples.
Assignment solve_exact(const AssignmentProblem& problem);

/// Exhaustive search over every SU -> candidate-or-nothing combination.
/// Throws std::length_error above 1e7 combinations.
Assignment enumerate_oracle(const AssignmentProblem& problem);

/// Objective and feasibility of an explicit choice of candidate indices.
bool assignment_feasible(const AssignmentProblem& problem, const std::vector<int>& indices);

/// Channel assignment for pairs that already agreed on a volume: each pair
/// may take at most one channel. weight = ρ log(Q_oi + aQ) − a(Qπ + ε).
struct AgreedPair {
  int su = 0;
  int pu = 0;
  double volume = 0.0;      // Q_ij*
  double data_price = 0.0;  // π_ij*
};
AssignmentProblem build_channel_problem(const NetworkScenario& s, const LinkModel& links,
                                        const std::vector<AgreedPair>& pairs, double channel_price,
                                        const TrustState& trust);
Assignment solve_channel_assignment(const NetworkScenario& s, const std::vector<AgreedPair>& pairs,
                                    double channel_price, const TrustState& trust);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

}  // namespace cdna
