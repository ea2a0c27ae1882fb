#include "cdna/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cdna {

namespace {
constexpr double kRangeSlack = 1e-12;
constexpr double kBudgetSlack = 1e-9;
}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void RadioParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("radio: alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("radio: beta must be > 0");
  if (!(noise_psd > 0.0) || !(tx_power_ratio > 0.0) || !(rx_threshold_ratio > 0.0) ||
      !(int_threshold_ratio > 0.0)) {
    throw std::invalid_argument("radio: power ratios must be > 0");
  }
}

double Node::q_min(double scale) const { return scale * data_volume(c_min, tau_min); }

void Node::validate() const {
  if (!(q0 >= 0.0)) throw std::invalid_argument("node " + std::to_string(id) + ": q0 < 0");
  if (!(c_min >= 0.0) || !(tau_min >= 0.0)) {
    throw std::invalid_argument("node " + std::to_string(id) + ": negative QoS floor");
  }
  if (!(reliability_prob >= 0.0 && reliability_prob <= 1.0)) {
    throw std::invalid_argument("node " + std::to_string(id) + ": reliability outside [0,1]");
  }
}

// --- AvailabilityMap -------------------------------------------------------

AvailabilityMap::AvailabilityMap(int n_su, int n_pu, int n_channels)
    : n_su_(n_su), n_pu_(n_pu), n_channels_(n_channels),
      values_(static_cast<std::size_t>(n_su) * n_pu * n_channels, 0.0) {
  if (n_su < 0 || n_pu < 0 || n_channels < 0) throw std::invalid_argument("availability: negative size");
}

std::size_t AvailabilityMap::index(int su, int pu, int channel) const {
  if (su < 0 || su >= n_su_ || pu < 0 || pu >= n_pu_ || channel < 0 || channel >= n_channels_) {
    throw std::out_of_range("availability index out of range");
  }
  return (static_cast<std::size_t>(su) * n_pu_ + pu) * n_channels_ + channel;
}

double AvailabilityMap::at(int su, int pu, int channel) const { return values_[index(su, pu, channel)]; }

void AvailabilityMap::set(int su, int pu, int channel, double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("availability must lie in (0,1] or be 0");
  values_[index(su, pu, channel)] = a;
}

void AvailabilityMap::erase_su(int su) {
  AvailabilityMap next(n_su_ - 1, n_pu_, n_channels_);
  for (int i = 0, k = 0; i < n_su_; ++i) {
    if (i == su) continue;
    for (int j = 0; j < n_pu_; ++j)
      for (int b = 0; b < n_channels_; ++b) next.values_[next.index(k, j, b)] = at(i, j, b);
    ++k;
  }
  *this = std::move(next);
}

void AvailabilityMap::erase_pu(int pu) {
  AvailabilityMap next(n_su_, n_pu_ - 1, n_channels_);
  for (int i = 0; i < n_su_; ++i)
    for (int j = 0, k = 0; j < n_pu_; ++j) {
      if (j == pu) continue;
      for (int b = 0; b < n_channels_; ++b) next.values_[next.index(i, k, b)] = at(i, j, b);
      ++k;
    }
  *this = std::move(next);
}

void AvailabilityMap::append_su() {
  AvailabilityMap next(n_su_ + 1, n_pu_, n_channels_);
  for (int i = 0; i < n_su_; ++i)
    for (int j = 0; j < n_pu_; ++j)
      for (int b = 0; b < n_channels_; ++b) next.values_[next.index(i, j, b)] = at(i, j, b);
  *this = std::move(next);
}

void AvailabilityMap::append_pu() {
  AvailabilityMap next(n_su_, n_pu_ + 1, n_channels_);
  for (int i = 0; i < n_su_; ++i)
    for (int j = 0; j < n_pu_; ++j)
      for (int b = 0; b < n_channels_; ++b) next.values_[next.index(i, j, b)] = at(i, j, b);
  *this = std::move(next);
}

void AvailabilityMap::append_channel() {
  AvailabilityMap next(n_su_, n_pu_, n_channels_ + 1);
  for (int i = 0; i < n_su_; ++i)
    for (int j = 0; j < n_pu_; ++j)
      for (int b = 0; b < n_channels_; ++b) next.values_[next.index(i, j, b)] = at(i, j, b);
  *this = std::move(next);
}

// --- NetworkScenario -------------------------------------------------------

double NetworkScenario::su_pu_distance(int su, int pu) const {
  return distance(sus.at(su).position, pus.at(pu).position);
}

void NetworkScenario::validate() const {
  radio.validate();
  if (sus.empty()) throw std::invalid_argument("scenario: needs at least one SU");
  if (pus.empty()) throw std::invalid_argument("scenario: needs at least one PU");
  if (channels < 1) throw std::invalid_argument("scenario: needs at least one channel");
  if (availability.n_su() != n() || availability.n_pu() != m() || availability.n_channels() != channels) {
    throw std::invalid_argument("scenario: availability dimensions do not match node counts");
  }
  auto inside = [&](const Node& nd) {
    return nd.position.x >= 0.0 && nd.position.x <= width && nd.position.y >= 0.0 && nd.position.y <= height;
  };
  std::set<int> su_ids, pu_ids;
  for (const auto& nd : sus) {
    nd.validate();
    if (nd.kind != NodeKind::kSU) throw std::invalid_argument("scenario: PU stored in SU list");
    if (!inside(nd)) throw std::invalid_argument("scenario: SU " + std::to_string(nd.id) + " outside area");
    if (!su_ids.insert(nd.id).second) throw std::invalid_argument("scenario: duplicate SU id");
  }
  for (const auto& nd : pus) {
    nd.validate();
    if (nd.kind != NodeKind::kPU) throw std::invalid_argument("scenario: SU stored in PU list");
    if (!inside(nd)) throw std::invalid_argument("scenario: PU " + std::to_string(nd.id) + " outside area");
    if (!pu_ids.insert(nd.id).second) throw std::invalid_argument("scenario: duplicate PU id");
  }
}

std::string to_string(const Triple& t) {
  std::ostringstream os;
  os << '(' << t.su << ',' << t.pu << ',' << t.channel << ')';
  return os.str();
}

// --- TradingTopology -------------------------------------------------------

void TradingTopology::add(const Triple& t, double q, double p) {
  if (q < 0.0) throw std::invalid_argument("topology: negative volume");
  auto pos = std::lower_bound(triples.begin(), triples.end(), t);
  if (pos != triples.end() && *pos == t) throw std::invalid_argument("topology: duplicate triple");
  triples.insert(pos, t);
  volume[{t.su, t.pu}] = q;
  price[t] = p;
}

double TradingTopology::volume_of(int su, int pu) const {
  auto it = volume.find({su, pu});
  return it == volume.end() ? 0.0 : it->second;
}

double TradingTopology::effective_volume(const NetworkScenario& s) const {
  double total = 0.0;
  for (const auto& t : triples) total += s.a(t.su, t.pu, t.channel) * volume_of(t.su, t.pu);
  return total;
}

// --- propagation -----------------------------------------------------------

double path_gain(double d, const RadioParams& radio) {
  if (!(d > 0.0)) throw std::domain_error("path_gain: distance must be > 0");
  return radio.beta * std::pow(d, -radio.alpha);
}

double transmission_range(const RadioParams& radio) {
  return std::pow(radio.beta * radio.tx_power_ratio / radio.rx_threshold_ratio, 1.0 / radio.alpha);
}

double interference_range(const RadioParams& radio) {
  return std::pow(radio.beta * radio.tx_power_ratio / radio.int_threshold_ratio, 1.0 / radio.alpha);
}

double link_capacity(double d, const RadioParams& radio) {
  if (!(d > 0.0)) throw std::domain_error("link_capacity: coincident nodes");
  return std::log2(1.0 + radio.tx_power_ratio * path_gain(d, radio));
}

double link_capacity(const NetworkScenario& s, int su, int pu) {
  return link_capacity(s.su_pu_distance(su, pu), s.radio);
}

double data_volume(double capacity, double tau) { return capacity * tau; }

bool within_range(double d, double range) { return d <= range * (1.0 + kRangeSlack); }

// --- interference sets -----------------------------------------------------

std::vector<int> candidate_pus(const NetworkScenario& s, int su, int channel) {
  const double r = transmission_range(s.radio);
  std::vector<int> out;
  for (int j = 0; j < s.m(); ++j) {
    if (s.a(su, j, channel) > 0.0 && within_range(s.su_pu_distance(su, j), r)) out.push_back(j);
  }
  return out;
}

std::vector<int> interferers(const NetworkScenario& s, int pu, int channel) {
  const double r = interference_range(s.radio);
  std::vector<int> out;
  for (int k = 0; k < s.n(); ++k) {
    if (s.a(k, pu, channel) <= 0.0) continue;
    if (!within_range(s.su_pu_distance(k, pu), r)) continue;
    if (candidate_pus(s, k, channel).empty()) continue;
    out.push_back(k);
  }
  return out;
}

// --- LinkModel -------------------------------------------------------------

LinkModel::LinkModel(const NetworkScenario& s) : s_(&s), n_(s.n()), m_(s.m()) {
  const double rt = transmission_range(s.radio);
  const double ri = interference_range(s.radio);
  const auto nm = static_cast<std::size_t>(n_) * m_;
  tx_.assign(nm, 0);
  intf_.assign(nm, 0);
  cap_.assign(nm, 0.0);
  has_tx_.assign(static_cast<std::size_t>(n_) * s.channels, 0);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < m_; ++j) {
      const double d = s.su_pu_distance(i, j);
      tx_[idx(i, j)] = within_range(d, rt);
      intf_[idx(i, j)] = within_range(d, ri);
      cap_[idx(i, j)] = d > 0.0 ? link_capacity(d, s.radio) : 0.0;
      if (!tx_[idx(i, j)]) continue;
      for (int b = 0; b < s.channels; ++b) {
        if (s.a(i, j, b) > 0.0) has_tx_[static_cast<std::size_t>(i) * s.channels + b] = 1;
      }
    }
  }
}

bool LinkModel::is_interferer(int su, int pu, int channel) const {
  return intf_[idx(su, pu)] && s_->a(su, pu, channel) > 0.0 &&
         has_tx_[static_cast<std::size_t>(su) * s_->channels + channel];
}

bool LinkModel::link_usable(int su, int pu, int channel) const {
  if (!tx_[idx(su, pu)]) return false;
  const double a = s_->a(su, pu, channel);
  if (a <= 0.0) return false;
  if (s_->su_pu_distance(su, pu) <= 0.0) return false;
  return a * cap_[idx(su, pu)] >= s_->sus[su].c_min;
}

bool LinkModel::qos_feasible(int su, int pu, int channel) const {
  return link_usable(su, pu, channel) && s_->q_min(su) < s_->pus[pu].q0;
}

bool LinkModel::conflicts(const Triple& x, const Triple& y) const {
  if (x == y) return false;
  if (x.su == y.su) return true;
  if (x.channel != y.channel) return false;
  if (x.pu == y.pu) return true;
  return is_interferer(y.su, x.pu, x.channel) || is_interferer(x.su, y.pu, y.channel);
}

std::string feasibility_violation(const TradingTopology& t, const NetworkScenario& s) {
  const LinkModel links(s);
  for (const auto& x : t.triples) {
    if (x.su < 0 || x.su >= s.n() || x.pu < 0 || x.pu >= s.m() || x.channel < 0 || x.channel >= s.channels) {
      return "index out of range " + to_string(x);
    }
    if (!links.link_usable(x.su, x.pu, x.channel)) return "link not usable " + to_string(x);
  }
  for (std::size_t a = 0; a < t.triples.size(); ++a) {
    for (std::size_t b = a + 1; b < t.triples.size(); ++b) {
      const auto& x = t.triples[a];
      const auto& y = t.triples[b];
      if (x.su == y.su) return "SU used twice " + to_string(x) + " " + to_string(y);
      if (x.pu == y.pu && x.channel == y.channel) return "(PU,channel) used twice " + to_string(x) + " " + to_string(y);
      if (links.conflicts(x, y)) return "interference " + to_string(x) + " " + to_string(y);
    }
  }
  for (const auto& [pair, q] : t.volume) {
    if (q < 0.0) return "negative volume";
  }
  return {};
}

bool check_feasible(const TradingTopology& t, const NetworkScenario& s) {
  return feasibility_violation(t, s).empty();
}

bool check_budgets(const TradingTopology& t, const NetworkScenario& s) {
  std::vector<double> used(s.m(), 0.0);
  for (const auto& x : t.triples) used[x.pu] += s.a(x.su, x.pu, x.channel) * t.volume_of(x.su, x.pu);
  for (int j = 0; j < s.m(); ++j) {
    if (used[j] > s.pus[j].q0 * (1.0 + kBudgetSlack) + kBudgetSlack) return false;
  }
  return true;
}

}  // namespace cdna
