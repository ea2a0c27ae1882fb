#include "cdna/dynamics.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cdna {

namespace {

struct KindName {
  EventKind kind;
  const char* name;
};
constexpr KindName kKindNames[] = {
    {EventKind::kSuArrive, "su-arrive"},   {EventKind::kSuDepart, "su-depart"},
    {EventKind::kPuArrive, "pu-arrive"},   {EventKind::kPuDepart, "pu-depart"},
    {EventKind::kChannelOn, "channel-on"}, {EventKind::kChannelOff, "channel-off"},
};

template <class T>
void erase_at(std::vector<T>& v, int k) {
  if (!v.empty()) v.erase(v.begin() + k);
}

std::set<int> erase_index(const std::set<int>& s, int k) {
  std::set<int> out;
  for (int x : s)
    if (x != k) out.insert(x > k ? x - 1 : x);
  return out;
}

double checked_a(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("event: availability must be in (0, 1]");
  return a;
}

}  // namespace

std::string to_string(EventKind k) {
  for (const auto& kn : kKindNames)
    if (kn.kind == k) return kn.name;
  return "?";
}

EventKind parse_event_kind(const std::string& s) {
  for (const auto& kn : kKindNames)
    if (s == kn.name) return kn.kind;
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

std::vector<DynamicsEvent> read_events(std::istream& is) {
  std::vector<DynamicsEvent> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const auto where = "events line " + std::to_string(lineno) + ": ";
    try {
      DynamicsEvent e;
      if (tok.size() < 3) throw std::invalid_argument("expected '<t> <kind> <id> ...'");
      e.time_index = std::stoi(tok[0]);
      e.kind = parse_event_kind(tok[1]);
      e.id = std::stoi(tok[2]);
      if (!out.empty() && e.time_index < out.back().time_index) throw std::invalid_argument("events out of order");
      std::vector<double> nums;
      for (std::size_t k = 3; k < tok.size(); ++k) {
        if (tok[k].rfind("a=", 0) == 0) {
          e.a = checked_a(std::stod(tok[k].substr(2)));
        } else {
          nums.push_back(std::stod(tok[k]));
        }
      }
      const bool arrive = e.kind == EventKind::kSuArrive || e.kind == EventKind::kPuArrive;
      if (arrive) {
        if (nums.size() != 5) throw std::invalid_argument("arrival needs x y Q0 and two node fields");
        e.node.id = e.id;
        e.node.position = {nums[0], nums[1]};
        e.node.q0 = nums[2];
        if (e.kind == EventKind::kSuArrive) {
          e.node.kind = NodeKind::kSU;
          e.node.c_min = nums[3];
          e.node.tau_min = nums[4];
        } else {
          e.node.kind = NodeKind::kPU;
          e.node.plan_price = nums[3];
          e.node.energy_cost = nums[4];
        }
        e.node.validate();
      } else if (!nums.empty()) {
        throw std::invalid_argument("unexpected fields after id");
      }
      if (e.a && (e.kind == EventKind::kSuDepart || e.kind == EventKind::kPuDepart ||
                  e.kind == EventKind::kChannelOff)) {
        throw std::invalid_argument("a= only applies to arrivals and channel-on");
      }
      out.push_back(e);
    } catch (const std::exception& ex) {
      throw std::invalid_argument(where + ex.what());
    }
  }
  return out;
}

std::vector<DynamicsEvent> load_events(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open events file " + path);
  return read_events(f);
}

void write_events(std::ostream& os, const std::vector<DynamicsEvent>& events) {
  os << std::setprecision(17);
  for (const auto& e : events) {
    os << e.time_index << ' ' << to_string(e.kind) << ' ' << e.id;
    if (e.kind == EventKind::kSuArrive) {
      os << ' ' << e.node.position.x << ' ' << e.node.position.y << ' ' << e.node.q0 << ' ' << e.node.c_min << ' '
         << e.node.tau_min;
    } else if (e.kind == EventKind::kPuArrive) {
      os << ' ' << e.node.position.x << ' ' << e.node.position.y << ' ' << e.node.q0 << ' ' << e.node.plan_price
         << ' ' << e.node.energy_cost;
    }
    if (e.a) os << " a=" << *e.a;
    os << '\n';
  }
}

// --- DynamicNetwork --------------------------------------------------------

DynamicNetwork::DynamicNetwork(NetworkScenario s, TrustState trust, RevenueShares shares, double arrival_trust)
    : s_(std::move(s)), trust_(std::move(trust)), shares_(std::move(shares)), arrival_trust_(arrival_trust) {
  s_.validate();
  if (trust_.n_su() != s_.n() || trust_.n_pu() != s_.m()) throw std::invalid_argument("trust does not fit scenario");
}

int DynamicNetwork::su_index(int id) const {
  for (int i = 0; i < s_.n(); ++i)
    if (s_.sus[i].id == id) return i;
  return -1;
}

int DynamicNetwork::pu_index(int id) const {
  for (int j = 0; j < s_.m(); ++j)
    if (s_.pus[j].id == id) return j;
  return -1;
}

void DynamicNetwork::remove_su(int i) {
  if (s_.n() == 1) throw std::invalid_argument("event: cannot remove the last SU");
  const int id = s_.sus[i].id;
  std::erase_if(saved_, [&](const auto& kv) { return std::get<1>(kv.first) == id; });
  s_.sus.erase(s_.sus.begin() + i);
  s_.availability.erase_su(i);
  trust_.erase_su(i);
  erase_at(shares_.sigma_su, i);
  shares_.excluded_sus = erase_index(shares_.excluded_sus, i);
}

void DynamicNetwork::remove_pu(int j) {
  if (s_.m() == 1) throw std::invalid_argument("event: cannot remove the last PU");
  const int id = s_.pus[j].id;
  std::erase_if(saved_, [&](const auto& kv) { return std::get<2>(kv.first) == id; });
  s_.pus.erase(s_.pus.begin() + j);
  s_.availability.erase_pu(j);
  trust_.erase_pu(j);
  erase_at(shares_.eta_pu, j);
  shares_.excluded_pus = erase_index(shares_.excluded_pus, j);
}

void DynamicNetwork::apply(const DynamicsEvent& e) {
  const double a = checked_a(e.a.value_or(kDefaultArrivalAvailability));
  switch (e.kind) {
    case EventKind::kSuDepart: {
      const int i = su_index(e.id);
      if (i < 0) throw std::invalid_argument("event: no SU with id " + std::to_string(e.id));
      remove_su(i);
      break;
    }
    case EventKind::kPuDepart: {
      const int j = pu_index(e.id);
      if (j < 0) throw std::invalid_argument("event: no PU with id " + std::to_string(e.id));
      remove_pu(j);
      break;
    }
    case EventKind::kSuArrive: {
      if (su_index(e.id) >= 0) throw std::invalid_argument("event: SU id already present");
      Node nd = e.node;
      nd.kind = NodeKind::kSU;
      nd.id = e.id;
      s_.sus.push_back(nd);
      s_.availability.append_su();
      trust_.append_su();
      const int i = s_.n() - 1;
      for (int j = 0; j < s_.m(); ++j) {
        trust_.set_su_to_pu(i, j, arrival_trust_);
        trust_.set_pu_to_su(j, i, arrival_trust_);
        for (int b = 0; b < s_.channels; ++b) {
          if (off_.count(b)) {
            saved_[{b, nd.id, s_.pus[j].id}] = a;
          } else {
            s_.availability.set(i, j, b, a);
          }
        }
      }
      if (!shares_.sigma_su.empty()) shares_.sigma_su.push_back(shares_.sigma);
      break;
    }
    case EventKind::kPuArrive: {
      if (pu_index(e.id) >= 0) throw std::invalid_argument("event: PU id already present");
      Node nd = e.node;
      nd.kind = NodeKind::kPU;
      nd.id = e.id;
      s_.pus.push_back(nd);
      s_.availability.append_pu();
      trust_.append_pu();
      const int j = s_.m() - 1;
      for (int i = 0; i < s_.n(); ++i) {
        trust_.set_su_to_pu(i, j, arrival_trust_);
        trust_.set_pu_to_su(j, i, arrival_trust_);
        for (int b = 0; b < s_.channels; ++b) {
          if (off_.count(b)) {
            saved_[{b, s_.sus[i].id, nd.id}] = a;
          } else {
            s_.availability.set(i, j, b, a);
          }
        }
      }
      if (!shares_.eta_pu.empty()) shares_.eta_pu.push_back(shares_.eta);
      break;
    }
    case EventKind::kChannelOff: {
      const int b = e.id;
      if (b < 0 || b >= s_.channels) throw std::invalid_argument("event: no channel " + std::to_string(b));
      if (!off_.insert(b).second) throw std::invalid_argument("event: channel already off");
      for (int i = 0; i < s_.n(); ++i)
        for (int j = 0; j < s_.m(); ++j) {
          saved_[{b, s_.sus[i].id, s_.pus[j].id}] = s_.availability.at(i, j, b);
          s_.availability.set(i, j, b, 0.0);
        }
      break;
    }
    case EventKind::kChannelOn: {
      const int b = e.id;
      if (b == s_.channels) {
        s_.availability.append_channel();
        ++s_.channels;
        for (int i = 0; i < s_.n(); ++i)
          for (int j = 0; j < s_.m(); ++j) s_.availability.set(i, j, b, a);
        break;
      }
      if (b < 0 || b > s_.channels) throw std::invalid_argument("event: no channel " + std::to_string(b));
      if (!off_.erase(b)) throw std::invalid_argument("event: channel already on");
      for (int i = 0; i < s_.n(); ++i)
        for (int j = 0; j < s_.m(); ++j) {
          const auto it = saved_.find({b, s_.sus[i].id, s_.pus[j].id});
          const double v = e.a ? a : (it != saved_.end() ? it->second : 0.0);
          s_.availability.set(i, j, b, v);
        }
      std::erase_if(saved_, [&](const auto& kv) { return std::get<0>(kv.first) == b; });
      break;
    }
  }
  s_.validate();
}

// --- warm state ------------------------------------------------------------

PortableState to_portable(const MarketState& st, const NetworkScenario& s) {
  PortableState p;
  for (const auto& t : st.matching) p.matching.insert({s.sus[t.su].id, s.pus[t.pu].id, t.channel});
  for (const auto& [key, price] : st.prices) p.prices[{s.pus[key.first].id, key.second}] = price;
  return p;
}

MarketState from_portable(const PortableState& p, const DynamicNetwork& net) {
  MarketState st;
  const int channels = net.scenario().channels;
  for (const auto& t : p.matching) {
    const int i = net.su_index(t.su), j = net.pu_index(t.pu);
    if (i >= 0 && j >= 0 && t.channel < channels) st.matching.insert({i, j, t.channel});
  }
  for (const auto& [key, price] : p.prices) {
    const int j = net.pu_index(key.first);
    if (j >= 0 && key.second < channels) st.prices[{j, key.second}] = price;
  }
  return st;
}

// --- replay ----------------------------------------------------------------

std::vector<DynamicStep> run_dynamic(const NetworkScenario& s, const std::vector<DynamicsEvent>& events,
                                     const TrustState& trust, const RevenueShares& shares, const MatchingConfig& cfg,
                                     double arrival_trust) {
  DynamicNetwork net(s, trust, shares, arrival_trust);
  std::vector<DynamicStep> steps;
  std::optional<PortableState> carried;

  auto solve = [&](std::optional<DynamicsEvent> ev) {
    DynamicStep step;
    step.event = std::move(ev);
    step.scenario = net.scenario();
    step.active_channels = net.active_channels();
    const auto t0 = std::chrono::steady_clock::now();
    const DistributedGame game(step.scenario, net.trust(), net.shares());
    std::optional<MarketState> warm;
    if (carried) warm = from_portable(*carried, net);
    const auto run = solve_matching(game, cfg, warm ? &*warm : nullptr);
    step.outcome = outcome_from_matching(game, run, cfg);
    step.outcome.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    step.rounds = run.rounds;
    step.feasible = check_feasible(step.outcome.topology, step.scenario) &&
                    check_budgets(step.outcome.topology, step.scenario) && matching_feasible(game, run.state);
    carried = to_portable(run.state, step.scenario);
    steps.push_back(std::move(step));
  };

  solve(std::nullopt);
  for (const auto& e : events) {
    net.apply(e);
    solve(e);
  }
  return steps;
}

}  // namespace cdna
