// Scenario generation, baselines and Monte Carlo comparison of the schemes.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdna/dynamics.hpp"
#include "cdna/matching.hpp"
#include "cdna/net_model.hpp"
#include "cdna/rng.hpp"
#include "cdna/schemes.hpp"
#include "cdna/trust.hpp"

namespace cdna {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kAllSchemes = {"centralized", "hybrid", "distributed", "mdm", "random"};

struct ExperimentConfig {
  int n_su = 10;
  int n_pu = 4;
  int n_channels = 5;
  double width = 1000.0;
  double height = 1000.0;
  std::uint64_t seed = 1;
  int reps = 100;
  RevenueShares shares;
  NegotiationConfig negotiation;
  MatchingConfig matching;
  std::vector<std::string> schemes = kAllSchemes;
  double sinr_min_db = 5.0;
  double sinr_max_db = 20.0;
  double tau_lo = 0.0;  // minutes
  double tau_hi = 10.0;
  double q0 = 10.0;           // GB
  double plan_price = 2.0;    // Φ_o
  double energy_cost = 0.01;  // e_j
  double volume_scale = 0.1;
  double trust = 1.0;  // uniform ρ in both directions
  int threads = 0;     // 0 = hardware concurrency
  std::string events;  // optional dynamics trace
  bool strict = false;

  void validate() const;  // throws ConfigError
};

/// key=value lines, '#' comments. Unknown keys and bad values throw ConfigError.
ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Applies one key=value setting; shared by the config file and the CLI.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// c_min = log2(1 + SINR) at unit bandwidth.
double sinr_db_to_cmin(double sinr_db);

NetworkScenario generate_scenario(const ExperimentConfig& cfg, Rng& rng);
TrustState scenario_trust(const NetworkScenario& s, double rho);

/// Random feasible triple per SU (SUs in random order), volume at Q_min, price p0.
SchemeOutcome baseline_random(const NetworkScenario& s, Rng& rng, double p0 = 0.1);
/// SUs in id order take the nearest PU with the first non-conflicting channel;
/// volume at the per-link optimum at price p0.
SchemeOutcome baseline_mdm(const NetworkScenario& s, double p0 = 0.1);

/// Runs one named scheme. `rng` is only used by the random baseline.
SchemeOutcome run_scheme(const std::string& scheme, const NetworkScenario& s, const TrustState& trust,
                         const ExperimentConfig& cfg, Rng& rng);

struct MetricsRecord {
  std::string scheme;
  int m = 0;  // number of PUs
  double u_su = 0.0;
  double u_pu = 0.0;
  double u_so = 0.0;
  double u_po = 0.0;
  double total_q = 0.0;
  double mean_price = 0.0;
  double cpu_time = 0.0;
  double efficiency = 1.0;
  double stable = 1.0;  // fraction of stable outcomes (distributed)
  int reps = 0;         // reps included in the means
  int failures = 0;     // non-converged or failed reps, excluded from the means

  bool operator==(const MetricsRecord&) const = default;
};

struct RepResult {
  int rep = 0;
  std::string scheme;
  SchemeOutcome outcome;
  bool failed = false;
  std::string error;
};

struct ComparisonResult {
  std::vector<MetricsRecord> records;  // one per scheme, in cfg.schemes order
  std::vector<RepResult> reps;         // sorted by (rep, scheme order)
};

/// Every rep draws its scenario from split_seed(cfg.seed, rep); reps run on a
/// worker pool and are aggregated in rep order.
ComparisonResult run_comparison(const ExperimentConfig& cfg);

/// Tidy CSV: scheme,M,metric,value.
void write_plot_data(std::ostream& os, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_plot_data(std::istream& is);
void emit_plot_data(const std::vector<MetricsRecord>& records, const std::string& path);

/// The five reconfigurations that follow the initial network in the dynamic
/// experiment: an SU leaves, the last channel goes off, a PU joins, an SU
/// joins, and the channel comes back. New nodes are drawn like the rest of
/// the scenario; from 10/3/5 this walks 9/3/5, 9/3/4, 9/4/4, 10/4/4, 10/4/5.
std::vector<DynamicsEvent> reconfiguration_events(const ExperimentConfig& cfg, const NetworkScenario& s, Rng& rng);

/// Stage 1 slot prices after behavioral access control: trust is simulated
/// with the given fractions of reliable SUs and PUs, shares and exclusions
/// follow from it, and the mean slot equilibrium price is returned.
struct TrustPricePoint {
  double mean_price = 0.0;
  double mean_eta = 0.0;
  double mean_sigma = 0.0;
  int excluded_sus = 0;
  int excluded_pus = 0;
  int slots = 0;
};
TrustPricePoint trust_price_point(const ExperimentConfig& cfg, double reliable_su, double reliable_pu,
                                  std::uint64_t seed, int samples = 100);

}  // namespace cdna
