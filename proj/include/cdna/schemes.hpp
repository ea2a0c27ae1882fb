// Operator-driven trading: the centralized scheme (SO picks the topology, PO
// negotiates a price per link) and the hybrid scheme (users agree on data prices
// pairwise, operators then assign channels and negotiate a channel price).
#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdna/assign_solver.hpp"
#include "cdna/net_model.hpp"
#include "cdna/trust.hpp"

namespace cdna {

struct RevenueShares {
  double eta = 0.7;    // PO -> PU
  double sigma = 0.7;  // SO -> SU
  double psi = 0.5;    // PO <-> SO
  std::vector<double> eta_pu;    // per-PU override, empty = use eta
  std::vector<double> sigma_su;  // per-SU override, empty = use sigma

  std::set<int> excluded_sus;    // denied access by the operators
  std::set<int> excluded_pus;

  double eta_of(int pu) const { return eta_pu.empty() ? eta : eta_pu.at(pu); }
  double sigma_of(int su) const { return sigma_su.empty() ? sigma : sigma_su.at(su); }
  void validate() const;
  /// Neither side excluded and both trust each other enough to trade.
  bool allows(const TrustState& trust, int su, int pu) const;

  static RevenueShares from_access(const AccessShares& a, double psi = 0.5);
};

struct NegotiationConfig {
  double chi = 1e-4;        // operator agreement band
  double chi_prime = 1e-4;  // user agreement band
  double dp = 0.01;
  double dpi = 0.01;
  double deps = 0.01;
  double p0 = 0.1;
  int max_iters = 10000;
  double alpha_share = 1.0;  // agreement when |U_S − α U_P| <= χ
  /// Grow the step while the gap keeps its sign until the first sign flip;
  /// every flip halves it.
  bool adaptive_steps = true;
  double plan_price_default = 2.0;
  /// Centralized scheme: one price per link instead of one common price.
  bool per_link_prices = true;

  void validate() const;
};

struct SchemeOutcome {
  std::string scheme;
  TradingTopology topology;
  std::vector<double> u_su;
  std::vector<double> u_pu;
  double u_so = 0.0;
  double u_po = 0.0;
  double price = 0.0;          // centralized: mean link price weighted by aQ; hybrid: channel price ε; distributed: mean market price
  double total_q = 0.0;        // Σ a·Q over active triples
  double agreed_q = 0.0;       // Σ Q over agreed pairs (hybrid)
  int iterations = 0;
  double wall_time = 0.0;      // seconds
  bool converged = true;
  std::optional<bool> stable;  // distributed only
  std::optional<double> psi;   // distributed only
  std::vector<double> price_trace;
  int pairs_converged = 0;     // hybrid: pairs whose |U − V| met χ′
  int pairs_total = 0;
  double max_pair_gap = 0.0;   // hybrid: largest |U − V| over converged pairs

  double mean_price() const;
};

// --- one-dimensional price negotiation -------------------------------------

struct NegotiationResult {
  double price = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// Raises the price while gap(price) > tol, lowers it while gap < −tol.
/// The gap must be decreasing in the price for the search to settle.
NegotiationResult negotiate_price(const std::function<double(double)>& gap, double p0, double step, double tol,
                                  int max_iters, bool adaptive, double lo = 1e-9,
                                  double hi = std::numeric_limits<double>::infinity());

// --- centralized -----------------------------------------------------------

/// ρ log(Q_oi + aQ).
double su_utility_centralized(double rho, double q0, double aq);
/// r_ij = η Φ_o aQ / Q_a.
double pu_reward_centralized(double eta, double plan_price, double aq, double q_avail);
/// Agreement price of the symmetric single-link negotiation.
double closed_form_price(double rho, double q0, double q, double eta, double plan_price, double q_avail);

/// Candidate links of the centralized scheme with everything needed to price
/// them one by one. `problem` carries conflicts and budgets; its weights and
/// volumes are rewritten for each price vector.
struct CentralizedMarket {
  AssignmentProblem problem;
  std::vector<double> rho, q0, q_min, q_cap, a, eta, plan, q_avail;

  int size() const { return static_cast<int>(problem.candidates.size()); }
  /// a·Q chosen by the SO on link k at `price`.
  double volume(int k, double price) const;
  /// SO gain minus α times PO gain on link k, as if the link were active.
  double gap(int k, double price, double alpha) const;
};
CentralizedMarket build_centralized_market(const NetworkScenario& s, const LinkModel& links, const TrustState& trust,
                                           const RevenueShares& shares, const NegotiationConfig& cfg);

struct CentralizedEval {
  Assignment assignment;
  AssignmentProblem problem;
  double u_s = 0.0;
  double u_p = 0.0;
};
/// Solves the SO's assignment at one price per candidate link and evaluates
/// both operators on the chosen links.
CentralizedEval evaluate_centralized(const CentralizedMarket& market, const std::vector<double>& prices);

struct CentralizedNegotiation {
  std::vector<double> prices;  // one per candidate link
  CentralizedEval eval;        // assignment at the final prices
  int iterations = 0;
  bool agreed = false;
  std::vector<double> trace;   // mean price over the active links per round
};
/// PO/SO price negotiation on a market, per link or with one common price
/// as cfg.per_link_prices says.
CentralizedNegotiation negotiate_centralized(const CentralizedMarket& market, const NegotiationConfig& cfg);

/// One link whose volume is pinned at Q = aQ (a = 1) whatever the price: the
/// setting in which closed_form_price is the agreement point.
CentralizedMarket single_link_market(double rho, double q0, double q, double eta, double plan_price, double q_avail);

/// Negotiates on every usable link; the SO re-solves the assignment each round.
SchemeOutcome run_centralized(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares,
                              const NegotiationConfig& cfg = {});

// --- hybrid ----------------------------------------------------------------

struct SuDecision {
  bool trade = false;
  double volume = 0.0;
};
/// max ρ log(Q_oi + Q) − πQ over [q_min, q_max].
SuDecision su_solve_hybrid(double rho, double pi, double q0, double q_min, double q_max);

struct HybridRequest {
  int su = 0;
  double rho_pu = 1.0;  // ρ_ji
  double q_min = 0.0;
  double demand = 0.0;  // Q_ij*
};
/// Per-SU supply: interior Q_oj − ρ/(ηπ) clamped to [Q_min, demand], then
/// the budget is handed out in order of the PU's utility. SUs that cannot
/// get their Q_min get nothing.
std::vector<double> pu_solve_hybrid(const std::vector<HybridRequest>& requests, double pi, double eta, double e_j,
                                    double q0_pu, double q_avail);

struct PairAgreement {
  int su = 0;
  int pu = 0;
  double pi = 0.0;
  double volume = 0.0;
  double u = 0.0;  // SU side
  double v = 0.0;  // PU side
  bool converged = false;
  int iterations = 0;
};
/// Per-pair data price negotiation with the PU's share limited to q_avail.
std::optional<PairAgreement> negotiate_pair(const NetworkScenario& s, const TrustState& trust,
                                            const RevenueShares& shares, int su, int pu, double q_avail,
                                            const NegotiationConfig& cfg);

SchemeOutcome run_hybrid(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares,
                         const NegotiationConfig& cfg = {});

/// Σ aQ carried over Σ Q agreed; 1 when nothing was agreed.
double trading_efficiency(const SchemeOutcome& outcome);

/// Plan price Φ_o of a PU, falling back to the configured default.
double plan_price_of(const Node& pu, const NegotiationConfig& cfg);

}  // namespace cdna
