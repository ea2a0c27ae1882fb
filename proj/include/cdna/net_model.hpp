// Network model: geometry, radio propagation, channel availability and the
// interference constraints that every trading scheme has to respect.
//
// Indices: SUs are addressed by their position in NetworkScenario::sus, PUs by
// their position in NetworkScenario::pus, channels by 0..channels-1. Node::id
// is a stable external identifier used by files and dynamic events.
#pragma once

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cdna {

enum class NodeKind { kSU, kPU };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

/// Radio constants. Powers and thresholds are stored as ratios to the noise
/// power γ, which is all the capacity and range formulas need.
struct RadioParams {
  double beta = 62.5;
  double alpha = 4.0;
  double noise_psd = 3.34e-20;     // W/Hz
  double tx_power_ratio = 8.1e9;   // P_i / γ
  double rx_threshold_ratio = 8.1; // P_th^T / γ
  double int_threshold_ratio = 8.1;// P_th^I / γ

  void validate() const;
};

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::kSU;
  Point position;
  double q0 = 0.0;            // contracted data volume
  double plan_price = 0.0;    // Φ_o, PUs only
  double c_min = 0.0;         // bits/s/Hz, SUs only
  double tau_min = 0.0;       // minutes, SUs only
  double energy_cost = 0.0;   // e_j per association, PUs only
  double reliability_prob = 1.0;

  /// Demand floor Q_min = c_min · τ_min, converted to data units by `scale`.
  double q_min(double scale = 1.0) const;
  void validate() const;
};

/// Dense (su, pu, channel) -> a_ij^b table. Zero marks an unavailable
/// channel; stored values are otherwise in (0, 1].
class AvailabilityMap {
 public:
  AvailabilityMap() = default;
  AvailabilityMap(int n_su, int n_pu, int n_channels);

  double at(int su, int pu, int channel) const;
  void set(int su, int pu, int channel, double a);
  bool available(int su, int pu, int channel) const { return at(su, pu, channel) > 0.0; }

  int n_su() const { return n_su_; }
  int n_pu() const { return n_pu_; }
  int n_channels() const { return n_channels_; }

  // Structural edits used by dynamic events. New rows/columns start at 0.
  void erase_su(int su);
  void erase_pu(int pu);
  void append_su();
  void append_pu();
  void append_channel();

 private:
  std::size_t index(int su, int pu, int channel) const;

  int n_su_ = 0;
  int n_pu_ = 0;
  int n_channels_ = 0;
  std::vector<double> values_;
};

struct NetworkScenario {
  std::vector<Node> sus;
  std::vector<Node> pus;
  int channels = 1;
  RadioParams radio;
  AvailabilityMap availability;
  double width = 1000.0;
  double height = 1000.0;
  /// Data units per (bit/s/Hz · minute); turns c_min·τ_min into a volume
  /// comparable with the data plans.
  double volume_scale = 0.1;

  int n() const { return static_cast<int>(sus.size()); }
  int m() const { return static_cast<int>(pus.size()); }
  double a(int su, int pu, int channel) const { return availability.at(su, pu, channel); }
  double su_pu_distance(int su, int pu) const;
  double q_min(int su) const { return sus[su].q_min(volume_scale); }

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

struct Triple {
  int su = 0;
  int pu = 0;
  int channel = 0;
  auto operator<=>(const Triple&) const = default;
};

std::string to_string(const Triple& t);

/// Output of every scheme: active (i, j, b) associations with the nominal
/// traded volume Q_ij per pair and the unit price per triple.
struct TradingTopology {
  std::vector<Triple> triples;
  std::map<std::pair<int, int>, double> volume;
  std::map<Triple, double> price;

  bool empty() const { return triples.empty(); }
  void add(const Triple& t, double q, double p);
  double volume_of(int su, int pu) const;
  /// Σ a_ij^b · Q_ij over active triples.
  double effective_volume(const NetworkScenario& s) const;
};

// --- propagation -----------------------------------------------------------

double path_gain(double d, const RadioParams& radio);
double transmission_range(const RadioParams& radio);
double interference_range(const RadioParams& radio);
/// Shannon capacity at unit bandwidth for a link of length d.
double link_capacity(double d, const RadioParams& radio);
double link_capacity(const NetworkScenario& s, int su, int pu);
double data_volume(double capacity, double tau);

/// d <= range, with a relative slack so that a boundary distance computed
/// in floating point still counts as in range.
bool within_range(double d, double range);

// --- interference sets -----------------------------------------------------

/// T_i^b: PUs within transmission range of SU i whose link to i has channel b.
std::vector<int> candidate_pus(const NetworkScenario& s, int su, int channel);
/// I_j^b: SUs within interference range of PU j that could transmit on b.
std::vector<int> interferers(const NetworkScenario& s, int pu, int channel);

/// Precomputed range and interference relations for one scenario. All
/// schemes query conflicts through this so the rules live in one place.
class LinkModel {
 public:
  explicit LinkModel(const NetworkScenario& s);

  bool in_tx_range(int su, int pu) const { return tx_[idx(su, pu)]; }
  bool interferes(int su, int pu) const { return intf_[idx(su, pu)]; }
  /// True when SU k belongs to I_j^b.
  bool is_interferer(int su, int pu, int channel) const;
  double capacity(int su, int pu) const { return cap_[idx(su, pu)]; }

  /// Link exists, channel available and a·c >= c_min (QoS gate on capacity).
  bool link_usable(int su, int pu, int channel) const;
  /// link_usable plus the demand floor fitting in the PU's plan.
  bool qos_feasible(int su, int pu, int channel) const;

  /// I1/I2 conflict between two distinct triples (symmetric).
  bool conflicts(const Triple& x, const Triple& y) const;

  const NetworkScenario& scenario() const { return *s_; }

 private:
  std::size_t idx(int su, int pu) const { return static_cast<std::size_t>(su) * m_ + pu; }

  const NetworkScenario* s_;
  int n_ = 0;
  int m_ = 0;
  std::vector<char> tx_;
  std::vector<char> intf_;
  std::vector<double> cap_;
  std::vector<char> has_tx_;  // [su * B + b]: T_su^b non-empty
};

/// I1, I2 and t <= x (link usable) for every active triple.
bool check_feasible(const TradingTopology& t, const NetworkScenario& s);
/// Like check_feasible but names the first violation; empty when feasible.
std::string feasibility_violation(const TradingTopology& t, const NetworkScenario& s);
/// Σ_i a_ij^b Q_ij <= Q_oj for every PU (with a small relative tolerance).
bool check_budgets(const TradingTopology& t, const NetworkScenario& s);

}  // namespace cdna
