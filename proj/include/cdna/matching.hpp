// Distributed scheme: SUs and PUs form a many-to-one matching over (PU,
// channel) slots while each (PU, channel) market settles its price from
// demand and supply.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "cdna/market.hpp"
#include "cdna/net_model.hpp"
#include "cdna/schemes.hpp"
#include "cdna/trust.hpp"

namespace cdna {

struct MatchingConfig {
  double p0 = 0.1;
  double price_tol = 1e-6;
  int price_max_iters = 10000;
  int max_rounds = 1000;
  RatePolicy rate = RatePolicy::Jacobian;
  std::optional<int> pref_limit;  // truncate preference lists
  // revenue-share negotiation between the operators
  double chi = 1e-4;
  double dpsi = 0.01;
  int psi_max_iters = 10000;
  bool negotiate_psi = true;

  void validate() const;
};

/// (partner, channel) with the owner's utility for it.
struct PrefEntry {
  int partner = 0;
  int channel = 0;
  double utility = 0.0;
};

using MarketKey = std::pair<int, int>;  // (pu, channel)

struct MarketState {
  std::map<MarketKey, double> prices;
  std::vector<std::vector<PrefEntry>> su_prefs;  // entries (pu, channel)
  std::vector<std::vector<PrefEntry>> pu_prefs;  // entries (su, channel)
  std::set<Triple> matching;
  int delta = 0;

  double price(int pu, int channel) const;
  /// Current triple of an SU, if matched.
  std::optional<Triple> of_su(int su) const;
};

struct QuotaInfo {
  double budget = 0.0;  // Q_aj
  int su_quota = 0;     // n_aj
  int channel_quota = 0;
};

/// Everything the distributed scheme needs about one scenario: which triples
/// may trade and what each side gets from them at a given price.
class DistributedGame {
 public:
  DistributedGame(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares);

  const NetworkScenario& scenario() const { return *s_; }
  const LinkModel& links() const { return links_; }
  const TrustState& trust() const { return *trust_; }
  const RevenueShares& shares() const { return shares_; }

  /// In range, QoS met, trusted, and the SU's floor fits in the PU's plan.
  bool candidate(int su, int pu, int channel) const;
  double sellable(int pu) const;

  /// Traded a·Q on a triple at `price`: the short side of demand and supply,
  /// kept within [Q_min, sellable].
  double traded_volume(const Triple& t, double price) const;
  /// SU utility at its own demand and PU utility at its own supply, each
  /// clamped to the same bounds.
  double su_value(const Triple& t, double price) const;
  double pu_value(const Triple& t, double price) const;
  /// Utilities at the traded volume.
  double su_utility(const Triple& t, double price) const;
  double pu_utility(const Triple& t, double price) const;

  /// Market of slot (pu, channel): the listed SUs as buyers, and every PU that
  /// one of them could use on that channel as a seller.
  Market slot_market(int pu, int channel, const std::vector<int>& buyers) const;
  /// Market between one SU and one PU on one channel.
  Market pair_market(const Triple& t) const;

  QuotaInfo quota(int pu, const std::vector<int>& proposers) const;

 private:
  const NetworkScenario* s_;
  const TrustState* trust_;
  RevenueShares shares_;
  LinkModel links_;
};

/// Preference lists at the given slot prices. Ties go to the lower (partner,
/// channel).
void build_preferences(const DistributedGame& g, MarketState& state, std::optional<int> limit = std::nullopt);

/// Slot prices from the slot markets of every listed SU. Slots nobody can
/// use keep cfg.p0. Returns the number of slot markets that did not settle.
int initialize_prices(const DistributedGame& g, MarketState& state, const MatchingConfig& cfg);

/// Deferred acceptance followed by blocking-pair repair on fixed preferences.
/// Returns false when the repair hit its cap.
bool match_round(const DistributedGame& g, MarketState& state, int repair_cap);

/// Whether (su, pu) would both gain from trading on some channel and the
/// trade fits the PU's quota, budget and interference constraints.
bool is_blocking_pair(const DistributedGame& g, const MarketState& state, int su, int pu);
bool verify_stability(const DistributedGame& g, const MarketState& state);
/// Definition-level structural checks on a matching (one slot per SU, one SU
/// per slot, quotas, budgets, interference).
bool matching_feasible(const DistributedGame& g, const MarketState& state);

struct OperatorUtilities {
  double u_s = 0.0;
  double u_p = 0.0;
};
/// U_S = Σ (1 − ψ)[U_ij − σ p a Q],  U_P = Σ ψ[U_ij − σ p a Q] + (1 − η) p a Q.
OperatorUtilities operator_utilities_dist(const DistributedGame& g, const MarketState& state, double psi);

struct PsiResult {
  double psi = 0.5;
  bool converged = false;
  int iterations = 0;
};
PsiResult negotiate_revenue_share(const DistributedGame& g, const MarketState& state, const MatchingConfig& cfg,
                                  double psi0 = 0.5);

struct MatchingRun {
  MarketState state;
  bool converged = false;
  int rounds = 0;
  int unsettled_markets = 0;        // slot or pair markets whose price did not settle
  std::vector<double> price_trace;  // mean matched price per round
};

/// Stage 1 prices and preferences, then rounds of matching and re-pricing
/// until two consecutive matchings agree. `warm` resumes from an earlier
/// state (its prices and matching), as the dynamic replay does.
MatchingRun solve_matching(const DistributedGame& g, const MatchingConfig& cfg,
                           const MarketState* warm = nullptr);

SchemeOutcome outcome_from_matching(const DistributedGame& g, const MatchingRun& run, const MatchingConfig& cfg);

SchemeOutcome run_matching(const NetworkScenario& s, const TrustState& trust, const RevenueShares& shares,
                           const MatchingConfig& cfg = {});

/// Stage 1 equilibrium price of every slot that has at least one buyer.
std::map<MarketKey, double> slot_equilibrium_prices(const NetworkScenario& s, const TrustState& trust,
                                                    const RevenueShares& shares, const MatchingConfig& cfg = {});

}  // namespace cdna
