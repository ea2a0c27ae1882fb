#include "cdna/trust.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdna {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

template <class T>
void erase_row(std::vector<T>& v, int rows, int cols, int row) {
  (void)rows;
  v.erase(v.begin() + static_cast<std::ptrdiff_t>(row) * cols, v.begin() + static_cast<std::ptrdiff_t>(row + 1) * cols);
}

template <class T>
void erase_col(std::vector<T>& v, int rows, int cols, int col) {
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(rows) * (cols - 1));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (c != col) out.push_back(v[static_cast<std::size_t>(r) * cols + c]);
  v = std::move(out);
}

template <class T>
void append_col(std::vector<T>& v, int rows, int cols, T fill) {
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(rows) * (cols + 1));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.push_back(v[static_cast<std::size_t>(r) * cols + c]);
    out.push_back(fill);
  }
  v = std::move(out);
}

}  // namespace

// --- TrustState ------------------------------------------------------------

TrustState::TrustState(int n_su, int n_pu, TrustParams params)
    : n_su_(n_su), n_pu_(n_pu), params_(params),
      rho_su_(static_cast<std::size_t>(n_su) * n_pu, params.bootstrap),
      rho_pu_(static_cast<std::size_t>(n_su) * n_pu, params.bootstrap),
      xi_su_(n_su, 1.0), xi_pu_(n_pu, 1.0),
      n_(static_cast<std::size_t>(n_su) * n_pu, 0) {
  if (n_su < 0 || n_pu < 0) throw std::invalid_argument("trust: negative size");
}

TrustState TrustState::uniform(int n_su, int n_pu, double rho, TrustParams params) {
  check_unit(rho, "trust");
  TrustState st(n_su, n_pu, params);
  std::fill(st.rho_su_.begin(), st.rho_su_.end(), rho);
  std::fill(st.rho_pu_.begin(), st.rho_pu_.end(), rho);
  return st;
}

void TrustState::set_su_to_pu(int su, int pu, double rho) {
  check_unit(rho, "trust");
  rho_su_[su * n_pu_ + pu] = rho;
}

void TrustState::set_pu_to_su(int pu, int su, double rho) {
  check_unit(rho, "trust");
  rho_pu_[pu * n_su_ + su] = rho;
}

void TrustState::set_su_reliability(int su, double xi) {
  check_unit(xi, "reliability");
  xi_su_[su] = xi;
}

void TrustState::set_pu_reliability(int pu, double xi) {
  check_unit(xi, "reliability");
  xi_pu_[pu] = xi;
}

int TrustState::su_transactions(int su) const {
  int total = 0;
  for (int j = 0; j < n_pu_; ++j) total += transactions(su, j);
  return total;
}

int TrustState::pu_transactions(int pu) const {
  int total = 0;
  for (int i = 0; i < n_su_; ++i) total += transactions(i, pu);
  return total;
}

bool TrustState::admitted(int su, int pu) const {
  return su_to_pu(su, pu) >= params_.threshold && pu_to_su(pu, su) >= params_.threshold;
}

void TrustState::erase_su(int su) {
  erase_row(rho_su_, n_su_, n_pu_, su);
  erase_row(n_, n_su_, n_pu_, su);
  erase_col(rho_pu_, n_pu_, n_su_, su);
  xi_su_.erase(xi_su_.begin() + su);
  --n_su_;
}

void TrustState::erase_pu(int pu) {
  erase_col(rho_su_, n_su_, n_pu_, pu);
  erase_col(n_, n_su_, n_pu_, pu);
  erase_row(rho_pu_, n_pu_, n_su_, pu);
  xi_pu_.erase(xi_pu_.begin() + pu);
  --n_pu_;
}

void TrustState::append_su() {
  rho_su_.insert(rho_su_.end(), n_pu_, params_.bootstrap);
  n_.insert(n_.end(), n_pu_, 0);
  append_col(rho_pu_, n_pu_, n_su_, params_.bootstrap);
  xi_su_.push_back(1.0);
  ++n_su_;
}

void TrustState::append_pu() {
  append_col(rho_su_, n_su_, n_pu_, params_.bootstrap);
  append_col(n_, n_su_, n_pu_, 0);
  rho_pu_.insert(rho_pu_.end(), n_su_, params_.bootstrap);
  xi_pu_.push_back(1.0);
  ++n_pu_;
}

// --- building blocks -------------------------------------------------------

double reliability(double u_realized, double u_agreed) {
  if (!(u_agreed > 0.0)) throw std::domain_error("reliability: agreed utility must be > 0");
  return clamp01(u_realized / u_agreed);
}

double update_reliability(double xi, double delivered_fraction, double smoothing) {
  return clamp01((1.0 - smoothing) * xi + smoothing * delivered_fraction);
}

double direct_observation(double xi_observed, double xi_observer, double h, double phi) {
  return 1.0 / (1.0 + std::exp(-h * (xi_observed - phi * xi_observer)));
}

double credibility(int n_pair, int n_observer_total, bool literal) {
  if (n_pair < 0 || n_observer_total < 0) throw std::invalid_argument("credibility: negative count");
  if (n_pair == 0) return 0.0;
  if (literal) return static_cast<double>(n_pair) / (n_pair + n_observer_total);
  if (n_observer_total == 0) return 0.0;
  return static_cast<double>(n_pair) / n_observer_total;
}

ProfileRanges profile_ranges(const std::vector<QosProfile>& population) {
  ProfileRanges r;
  if (population.empty()) return r;
  auto [cmin, cmax] = std::minmax_element(population.begin(), population.end(),
                                          [](const auto& a, const auto& b) { return a.c_min < b.c_min; });
  auto [tmin, tmax] = std::minmax_element(population.begin(), population.end(),
                                          [](const auto& a, const auto& b) { return a.tau_min < b.tau_min; });
  r.c_span = cmax->c_min - cmin->c_min;
  r.tau_span = tmax->tau_min - tmin->tau_min;
  return r;
}

double similarity(const QosProfile& a, const QosProfile& b, const ProfileRanges& ranges) {
  double d = 0.0;
  if (ranges.c_span > 0.0) d += std::abs(a.c_min - b.c_min) / ranges.c_span;
  if (ranges.tau_span > 0.0) d += std::abs(a.tau_min - b.tau_min) / ranges.tau_span;
  return std::max(0.0, 1.0 - d);
}

double indirect_recommendation(const std::vector<Recommendation>& others) {
  double sum = 0.0;
  for (const auto& r : others) sum += r.similarity * r.credibility * r.observation;
  return clamp01(sum);
}

double trustworthiness(double o_dir, double o_ind, double omega) {
  check_unit(omega, "omega");
  return clamp01(omega * o_dir + (1.0 - omega) * o_ind);
}

// --- TrustModel ------------------------------------------------------------

TrustModel::TrustModel(std::vector<QosProfile> su_profiles)
    : profiles_(std::move(su_profiles)), ranges_(profile_ranges(profiles_)) {}

double TrustModel::su_similarity(int a, int b) const {
  if (a < 0 || b < 0 || a >= static_cast<int>(profiles_.size()) || b >= static_cast<int>(profiles_.size())) {
    return 1.0;
  }
  return similarity(profiles_[a], profiles_[b], ranges_);
}

TrustBreakdown TrustModel::su_to_pu(const TrustState& st, int su, int pu) const {
  const auto& p = st.params();
  TrustBreakdown out;
  out.o_dir = direct_observation(st.pu_reliability(pu), st.su_reliability(su), p.h, p.phi);
  std::vector<Recommendation> recs;
  for (int k = 0; k < st.n_su(); ++k) {
    if (k == su || st.transactions(k, pu) == 0) continue;
    recs.push_back({su_similarity(su, k), credibility(st.transactions(k, pu), st.su_transactions(k), p.literal_credibility),
                    direct_observation(st.pu_reliability(pu), st.su_reliability(k), p.h, p.phi)});
  }
  out.o_ind = indirect_recommendation(recs);
  out.rho = trustworthiness(out.o_dir, out.o_ind, p.omega);
  return out;
}

TrustBreakdown TrustModel::pu_to_su(const TrustState& st, int pu, int su) const {
  const auto& p = st.params();
  TrustBreakdown out;
  out.o_dir = direct_observation(st.su_reliability(su), st.pu_reliability(pu), p.h, p.phi);
  std::vector<Recommendation> recs;
  for (int q = 0; q < st.n_pu(); ++q) {
    if (q == pu || st.transactions(su, q) == 0) continue;
    recs.push_back({1.0, credibility(st.transactions(su, q), st.pu_transactions(q), p.literal_credibility),
                    direct_observation(st.su_reliability(su), st.pu_reliability(q), p.h, p.phi)});
  }
  out.o_ind = indirect_recommendation(recs);
  out.rho = trustworthiness(out.o_dir, out.o_ind, p.omega);
  return out;
}

void TrustModel::recompute_all(TrustState& st) const {
  TrustState snapshot = st;
  for (int i = 0; i < st.n_su(); ++i)
    for (int j = 0; j < st.n_pu(); ++j) {
      st.set_su_to_pu(i, j, su_to_pu(snapshot, i, j).rho);
      st.set_pu_to_su(j, i, pu_to_su(snapshot, j, i).rho);
    }
}

double TrustModel::autonomous_su_to_pu(const TrustState& st, int su, int pu) const {
  // Peers k reachable through a chain su -> j' -> k (both used some other PU
  // j') that also have history with pu. Their stored trust in pu stands in for
  // the fresh observation they would otherwise have to send.
  const auto& p = st.params();
  std::vector<Recommendation> recs;
  for (int k = 0; k < st.n_su(); ++k) {
    if (k == su || st.transactions(k, pu) == 0) continue;
    bool chained = false;
    for (int jp = 0; jp < st.n_pu() && !chained; ++jp)
      chained = jp != pu && st.transactions(su, jp) > 0 && st.transactions(k, jp) > 0;
    if (!chained) continue;
    recs.push_back({su_similarity(su, k), credibility(st.transactions(k, pu), st.su_transactions(k), p.literal_credibility),
                    st.su_to_pu(k, pu)});
  }
  if (recs.empty()) return su_to_pu(st, su, pu).rho;
  const double o_dir = direct_observation(st.pu_reliability(pu), st.su_reliability(su), p.h, p.phi);
  return trustworthiness(o_dir, indirect_recommendation(recs), p.omega);
}

double TrustModel::autonomous_pu_to_su(const TrustState& st, int pu, int su) const {
  const auto& p = st.params();
  std::vector<Recommendation> recs;
  for (int q = 0; q < st.n_pu(); ++q) {
    if (q == pu || st.transactions(su, q) == 0) continue;
    bool chained = false;
    for (int ip = 0; ip < st.n_su() && !chained; ++ip)
      chained = ip != su && st.transactions(ip, pu) > 0 && st.transactions(ip, q) > 0;
    if (!chained) continue;
    recs.push_back({1.0, credibility(st.transactions(su, q), st.pu_transactions(q), p.literal_credibility),
                    st.pu_to_su(q, su)});
  }
  if (recs.empty()) return pu_to_su(st, pu, su).rho;
  const double o_dir = direct_observation(st.su_reliability(su), st.pu_reliability(pu), p.h, p.phi);
  return trustworthiness(o_dir, indirect_recommendation(recs), p.omega);
}

void TrustModel::recompute_all_autonomous(TrustState& st) const {
  TrustState snapshot = st;
  for (int i = 0; i < st.n_su(); ++i)
    for (int j = 0; j < st.n_pu(); ++j) {
      st.set_su_to_pu(i, j, autonomous_su_to_pu(snapshot, i, j));
      st.set_pu_to_su(j, i, autonomous_pu_to_su(snapshot, j, i));
    }
}

TrustModel make_trust_model(const NetworkScenario& s) {
  std::vector<QosProfile> profiles;
  profiles.reserve(s.sus.size());
  for (const auto& nd : s.sus) profiles.push_back({nd.c_min, nd.tau_min});
  return TrustModel(std::move(profiles));
}

// --- access control --------------------------------------------------------

AccessShares access_control_shares(const TrustState& st, double default_share) {
  AccessShares out;
  out.eta.assign(st.n_pu(), default_share);
  out.sigma.assign(st.n_su(), default_share);
  const double thr = st.params().threshold;
  for (int j = 0; j < st.n_pu(); ++j) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < st.n_su(); ++i)
      if (st.transactions(i, j) > 0) sum += st.su_to_pu(i, j), ++count;
    if (count == 0) {
      for (int i = 0; i < st.n_su(); ++i) sum += st.su_to_pu(i, j), ++count;
    }
    if (count > 0) out.eta[j] = sum / count;
    if (out.eta[j] < thr) out.excluded_pus.insert(j);
  }
  for (int i = 0; i < st.n_su(); ++i) {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < st.n_pu(); ++j)
      if (st.transactions(i, j) > 0) sum += st.pu_to_su(j, i), ++count;
    if (count == 0) {
      for (int j = 0; j < st.n_pu(); ++j) sum += st.pu_to_su(j, i), ++count;
    }
    if (count > 0) out.sigma[i] = sum / count;
    if (out.sigma[i] < thr) out.excluded_sus.insert(i);
  }
  return out;
}

// --- behavior --------------------------------------------------------------

bool is_reliable(const Node& nd) { return nd.reliability_prob >= kReliableFloor; }

BehaviorDraw sample_behavior(const Node& nd, Rng& rng) {
  BehaviorDraw d;
  d.node = nd.id;
  d.delivered_fraction = is_reliable(nd) ? uniform(rng, kReliableFloor, 1.0) : uniform(rng, 0.5, kReliableFloor);
  return d;
}

// --- simulation ------------------------------------------------------------

TrustSimResult simulate_trust(const TrustSimConfig& cfg, std::uint64_t seed) {
  if (cfg.n_su < 1 || cfg.n_pu < 1) throw std::invalid_argument("trust simulation needs nodes on both sides");
  Rng rng(seed);
  TrustSimResult res;
  auto make_nodes = [&](int count, NodeKind kind, double reliable_fraction) {
    std::vector<Node> nodes(count);
    const int n_reliable = static_cast<int>(std::lround(reliable_fraction * count));
    for (int k = 0; k < count; ++k) {
      nodes[k].id = k;
      nodes[k].kind = kind;
      nodes[k].reliability_prob = k < n_reliable ? 1.0 : 0.5;
      if (kind == NodeKind::kSU) {
        nodes[k].c_min = uniform(rng, 2.0575, 6.6582);
        nodes[k].tau_min = uniform(rng, 0.0, 10.0);
      }
    }
    return nodes;
  };
  res.sus = make_nodes(cfg.n_su, NodeKind::kSU, cfg.reliable_su_fraction);
  res.pus = make_nodes(cfg.n_pu, NodeKind::kPU, cfg.reliable_pu_fraction);

  std::vector<QosProfile> profiles;
  for (const auto& nd : res.sus) profiles.push_back({nd.c_min, nd.tau_min});
  const TrustModel model(profiles);
  res.state = TrustState(cfg.n_su, cfg.n_pu, cfg.params);
  auto& st = res.state;

  for (int step = 0; step < cfg.samples; ++step) {
    for (int i = 0; i < cfg.n_su; ++i) {
      const int j = uniform_int(rng, cfg.n_pu);
      const auto su_draw = sample_behavior(res.sus[i], rng);
      const auto pu_draw = sample_behavior(res.pus[j], rng);
      st.add_transaction(i, j);
      st.set_su_reliability(i, update_reliability(st.su_reliability(i), su_draw.delivered_fraction, cfg.params.ema));
      st.set_pu_reliability(j, update_reliability(st.pu_reliability(j), pu_draw.delivered_fraction, cfg.params.ema));
    }
    if (cfg.autonomous_after && step >= *cfg.autonomous_after) {
      model.recompute_all_autonomous(st);
    } else {
      model.recompute_all(st);
    }
  }
  res.shares = access_control_shares(st);
  double se = 0.0, ss = 0.0;
  for (double v : res.shares.eta) se += v;
  for (double v : res.shares.sigma) ss += v;
  res.mean_eta = se / cfg.n_pu;
  res.mean_sigma = ss / cfg.n_su;
  return res;
}

void write_trust_trace_header(std::ostream& os) { os << "step,observer,observed,xi,o_dir,o_ind,rho,eta_or_sigma\n"; }

void write_trust_trace(std::ostream& os, int step, const TrustState& st, const TrustModel& model) {
  const auto shares = access_control_shares(st);
  for (int i = 0; i < st.n_su(); ++i)
    for (int j = 0; j < st.n_pu(); ++j) {
      const auto b = model.su_to_pu(st, i, j);
      os << step << ",SU" << i << ",PU" << j << ',' << st.pu_reliability(j) << ',' << b.o_dir << ',' << b.o_ind << ','
         << st.su_to_pu(i, j) << ',' << shares.eta[j] << '\n';
    }
  for (int j = 0; j < st.n_pu(); ++j)
    for (int i = 0; i < st.n_su(); ++i) {
      const auto b = model.pu_to_su(st, j, i);
      os << step << ",PU" << j << ",SU" << i << ',' << st.su_reliability(i) << ',' << b.o_dir << ',' << b.o_ind << ','
         << st.pu_to_su(j, i) << ',' << shares.sigma[i] << '\n';
    }
}

}  // namespace cdna
