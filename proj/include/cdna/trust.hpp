// Trust relationships between SUs and PUs and the behavioral access control
// that turns them into revenue shares.
//
// Trust is directional: su_to_pu(i, j) is the trust of SU i in the connection
// offered by PU j (ρ_ij), pu_to_su(j, i) the trust of PU j in SU i (ρ_ji). The
// two are stored independently.
#pragma once

#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "cdna/net_model.hpp"
#include "cdna/rng.hpp"

namespace cdna {

struct TrustParams {
  double omega = 0.7;       // weight of own observations
  double h = 20.0;          // sigmoid steepness
  double phi = 0.8;         // reference-point coefficient
  double ema = 0.3;         // smoothing of the reliability moving average
  double threshold = 0.5;   // minimum trust to trade
  double bootstrap = 0.5;   // trust in a counterpart never observed
  bool literal_credibility = false;  // n / (n + Σn) instead of n / Σn
};

class TrustState {
 public:
  TrustState() = default;
  TrustState(int n_su, int n_pu, TrustParams params = {});

  /// Every pair trusts every counterpart with the same value.
  static TrustState uniform(int n_su, int n_pu, double rho, TrustParams params = {});

  int n_su() const { return n_su_; }
  int n_pu() const { return n_pu_; }
  const TrustParams& params() const { return params_; }
  TrustParams& params() { return params_; }

  double su_to_pu(int su, int pu) const { return rho_su_[su * n_pu_ + pu]; }
  double pu_to_su(int pu, int su) const { return rho_pu_[pu * n_su_ + su]; }
  void set_su_to_pu(int su, int pu, double rho);
  void set_pu_to_su(int pu, int su, double rho);

  double su_reliability(int su) const { return xi_su_[su]; }
  double pu_reliability(int pu) const { return xi_pu_[pu]; }
  void set_su_reliability(int su, double xi);
  void set_pu_reliability(int pu, double xi);

  int transactions(int su, int pu) const { return n_[su * n_pu_ + pu]; }
  void add_transaction(int su, int pu) { ++n_[su * n_pu_ + pu]; }
  int su_transactions(int su) const;
  int pu_transactions(int pu) const;

  /// Both directions at or above the trading threshold.
  bool admitted(int su, int pu) const;

  // Structural edits used by dynamic events; new nodes start at bootstrap.
  void erase_su(int su);
  void erase_pu(int pu);
  void append_su();
  void append_pu();

 private:
  int n_su_ = 0;
  int n_pu_ = 0;
  TrustParams params_;
  std::vector<double> rho_su_;  // [su * n_pu + pu]
  std::vector<double> rho_pu_;  // [pu * n_su + su]
  std::vector<double> xi_su_;
  std::vector<double> xi_pu_;
  std::vector<int> n_;          // [su * n_pu + pu], symmetric count
};

// --- building blocks -------------------------------------------------------

/// ξ = clamp(Ũ / U, 0, 1).
double reliability(double u_realized, double u_agreed);
/// Exponential moving average update of a reliability estimate.
double update_reliability(double xi, double delivered_fraction, double smoothing);
/// Sigmoid of the counterpart's reliability around the reference point φ·ξ_i.
double direct_observation(double xi_observed, double xi_observer, double h, double phi);
/// Share of the observer's transactions that involved this counterpart.
double credibility(int n_pair, int n_observer_total, bool literal = false);

struct QosProfile {
  double c_min = 0.0;
  double tau_min = 0.0;
};
struct ProfileRanges {
  double c_span = 0.0;
  double tau_span = 0.0;
};
ProfileRanges profile_ranges(const std::vector<QosProfile>& population);
/// 1 − Σ per-coordinate |Δ| / span, clamped at 0. Zero-span coordinates are
/// ignored.
double similarity(const QosProfile& a, const QosProfile& b, const ProfileRanges& ranges);

struct Recommendation {
  double similarity = 0.0;
  double credibility = 0.0;
  double observation = 0.0;
};
/// Σ S·C·O over the other observers, clamped to [0, 1].
double indirect_recommendation(const std::vector<Recommendation>& others);
double trustworthiness(double o_dir, double o_ind, double omega);

// --- state-level evaluation ------------------------------------------------

/// Direct and indirect components plus the combined ρ for one directed pair.
struct TrustBreakdown {
  double o_dir = 0.0;
  double o_ind = 0.0;
  double rho = 0.0;
};

/// Evaluates ρ_ij (SU -> PU) or ρ_ji (PU -> SU) from reliabilities and
/// transaction counts. SU similarity comes from the SUs' QoS profiles; PUs
/// have no profile and count as fully similar to each other.
class TrustModel {
 public:
  TrustModel(std::vector<QosProfile> su_profiles);

  TrustBreakdown su_to_pu(const TrustState& st, int su, int pu) const;
  TrustBreakdown pu_to_su(const TrustState& st, int pu, int su) const;
  double su_similarity(int a, int b) const;

  /// Recomputes every ρ in place (full recommendation exchange).
  void recompute_all(TrustState& st) const;

  /// Transitive estimate that avoids exchanging fresh observations: the
  /// observer keeps its own direct observation, and the recommendation term
  /// uses the stored trust of peers linked to it through a shared
  /// counterpart. Falls back to the full evaluation when no chain exists.
  double autonomous_su_to_pu(const TrustState& st, int su, int pu) const;
  double autonomous_pu_to_su(const TrustState& st, int pu, int su) const;
  void recompute_all_autonomous(TrustState& st) const;

 private:
  std::vector<QosProfile> profiles_;
  ProfileRanges ranges_;
};

TrustModel make_trust_model(const NetworkScenario& s);

struct AccessShares {
  std::vector<double> eta;    // per PU
  std::vector<double> sigma;  // per SU
  std::set<int> excluded_sus;
  std::set<int> excluded_pus;
};

/// η_j = mean_i ρ_ij and σ_i = mean_j ρ_ji over observed counterparts (pairs
/// with at least one transaction, or all pairs when there is no history).
/// Nodes whose share falls below the trust threshold are excluded.
AccessShares access_control_shares(const TrustState& st, double default_share = 0.7);

// --- behavior --------------------------------------------------------------

struct BehaviorDraw {
  int node = 0;
  double delivered_fraction = 1.0;
};

inline constexpr double kReliableFloor = 0.9;

bool is_reliable(const Node& nd);
/// Reliable nodes deliver a fraction in [0.9, 1], unreliable ones in [0.5, 0.9).
BehaviorDraw sample_behavior(const Node& nd, Rng& rng);

// --- trust simulation ------------------------------------------------------

struct TrustSimConfig {
  int n_su = 10;
  int n_pu = 10;
  double reliable_su_fraction = 0.5;  // R_i
  double reliable_pu_fraction = 0.5;  // R_j
  int samples = 100;
  /// Switch to autonomous evaluation after this many samples; nullopt keeps
  /// the full recommendation exchange throughout.
  std::optional<int> autonomous_after;
  TrustParams params;
};

struct TrustSimResult {
  TrustState state;
  AccessShares shares;
  std::vector<Node> sus;
  std::vector<Node> pus;
  double mean_eta = 0.0;
  double mean_sigma = 0.0;
};

/// Each sample every SU transacts with one randomly chosen PU; both sides draw
/// their delivered fraction, reliabilities are smoothed and trust recomputed.
/// Identical seeds give identical node populations and behavior draws whether
/// or not the run goes autonomous.
TrustSimResult simulate_trust(const TrustSimConfig& cfg, std::uint64_t seed);

/// Trust trace CSV: step,observer,observed,xi,o_dir,o_ind,rho,eta_or_sigma.
void write_trust_trace_header(std::ostream& os);
void write_trust_trace(std::ostream& os, int step, const TrustState& st, const TrustModel& model);

}  // namespace cdna
