// Dynamic tracking: a network that changes one event at a time, replayed
// through the distributed scheme with each matching resumed from the last.
//
// Event trace, one event per line ('#' starts a comment):
//
//   <t> su-depart <id>
//   <t> pu-depart <id>
//   <t> su-arrive <id> <x> <y> <Q0> <c_min> <tau_min> [a=<value>]
//   <t> pu-arrive <id> <x> <y> <Q0> <plan_price> <e> [a=<value>]
//   <t> channel-off <b>
//   <t> channel-on <b> [a=<value>]
//
// Arrivals give every new link the same availability a (default 0.75).
// channel-on for b == B adds a channel; for an earlier channel that was
// switched off it restores the old availabilities unless a= overrides them.
// Events must be ordered by t.
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cdna/matching.hpp"
#include "cdna/net_model.hpp"
#include "cdna/schemes.hpp"
#include "cdna/trust.hpp"

namespace cdna {

enum class EventKind { kSuArrive, kSuDepart, kPuArrive, kPuDepart, kChannelOn, kChannelOff };

std::string to_string(EventKind k);
EventKind parse_event_kind(const std::string& s);  // throws std::invalid_argument

inline constexpr double kDefaultArrivalAvailability = 0.75;

struct DynamicsEvent {
  int time_index = 0;
  EventKind kind = EventKind::kSuDepart;
  int id = 0;               // node id, or channel index
  Node node;                // arrivals only
  std::optional<double> a;  // availability of new or restored links
};

std::vector<DynamicsEvent> read_events(std::istream& is);
std::vector<DynamicsEvent> load_events(const std::string& path);
void write_events(std::ostream& os, const std::vector<DynamicsEvent>& events);

/// Scenario, trust and shares kept consistent across events. Arriving nodes
/// trust and are trusted with `arrival_trust`.
class DynamicNetwork {
 public:
  DynamicNetwork(NetworkScenario s, TrustState trust, RevenueShares shares, double arrival_trust);

  /// Throws std::invalid_argument when the event does not fit the network
  /// (unknown or duplicate id, channel already in that state).
  void apply(const DynamicsEvent& e);

  const NetworkScenario& scenario() const { return s_; }
  const TrustState& trust() const { return trust_; }
  const RevenueShares& shares() const { return shares_; }
  const std::set<int>& off_channels() const { return off_; }
  int active_channels() const { return s_.channels - static_cast<int>(off_.size()); }

  int su_index(int id) const;  // -1 when absent
  int pu_index(int id) const;

 private:
  void remove_su(int i);
  void remove_pu(int j);

  NetworkScenario s_;
  TrustState trust_;
  RevenueShares shares_;
  double arrival_trust_;
  std::set<int> off_;
  // Availability of switched-off channels keyed by (channel, su id, pu id).
  std::map<std::tuple<int, int, int>, double> saved_;
};

/// Matching state with nodes named by id, so it survives index shifts.
struct PortableState {
  std::set<Triple> matching;  // (su id, pu id, channel)
  std::map<MarketKey, double> prices;  // (pu id, channel)
};
PortableState to_portable(const MarketState& st, const NetworkScenario& s);
MarketState from_portable(const PortableState& p, const DynamicNetwork& net);

struct DynamicStep {
  std::optional<DynamicsEvent> event;  // empty for the initial configuration
  NetworkScenario scenario;
  int active_channels = 0;
  SchemeOutcome outcome;
  bool feasible = false;
  int rounds = 0;
};

/// Cold start on `s`, then one warm-started matching per event. Wall time in
/// each outcome covers building the game and matching.
std::vector<DynamicStep> run_dynamic(const NetworkScenario& s, const std::vector<DynamicsEvent>& events,
                                     const TrustState& trust, const RevenueShares& shares,
                                     const MatchingConfig& cfg = {}, double arrival_trust = 1.0);

}  // namespace cdna
