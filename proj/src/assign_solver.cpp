#include "cdna/assign_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cdna {

namespace {

constexpr double kTieTol = 1e-12;
constexpr double kBudgetTol = 1e-12;

bool fits(double used, double add, double budget) {
  if (std::isinf(budget)) return true;
  return used + add <= budget * (1.0 + kBudgetTol) + kBudgetTol;
}

/// Sum in canonical (sorted triple) order so equal sets give equal sums.
double canonical_objective(const AssignmentProblem& p, std::vector<int>& idx) {
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return p.candidates[a].triple < p.candidates[b].triple; });
  double obj = 0.0;
  for (int k : idx) obj += p.candidates[k].weight;
  return obj;
}

std::vector<Triple> triples_of(const AssignmentProblem& p, const std::vector<int>& idx) {
  std::vector<Triple> out;
  out.reserve(idx.size());
  for (int k : idx) out.push_back(p.candidates[k].triple);
  return out;
}

/// Strictly better objective, or a tie with a lexicographically smaller set.
bool improves(double obj, const std::vector<Triple>& set, double best_obj, const std::vector<Triple>& best_set,
              bool have_best) {
  if (!have_best) return true;
  const double tol = kTieTol * std::max(1.0, std::abs(best_obj));
  if (obj > best_obj + tol) return true;
  if (obj < best_obj - tol) return false;
  return set < best_set;
}

std::vector<std::vector<int>> by_su(const AssignmentProblem& p) {
  std::vector<std::vector<int>> out(p.n_su);
  for (int k = 0; k < static_cast<int>(p.candidates.size()); ++k) out[p.candidates[k].triple.su].push_back(k);
  return out;
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const AssignmentProblem& p) : p_(p), blocked_(p.candidates.size(), 0), used_(p.n_pu, 0.0) {
    auto groups = by_su(p);
    for (int i = 0; i < p.n_su; ++i) {
      auto& g = groups[i];
      if (g.empty()) {
        if (p.require_all) impossible_ = true;
        continue;
      }
      std::sort(g.begin(), g.end(), [&](int a, int b) {
        if (p.candidates[a].weight != p.candidates[b].weight) return p.candidates[a].weight > p.candidates[b].weight;
        return p.candidates[a].triple < p.candidates[b].triple;
      });
      levels_.push_back(std::move(g));
    }
    std::stable_sort(levels_.begin(), levels_.end(), [&](const auto& a, const auto& b) {
      return p.candidates[a.front()].weight > p.candidates[b.front()].weight;
    });
  }

  Assignment run() {
    Assignment out;
    if (impossible_) {
      out.feasible = false;
      return out;
    }
    dfs(0, 0.0);
    out.nodes = nodes_;
    if (!have_best_) {
      out.feasible = false;
      return out;
    }
    out.indices = best_idx_;
    out.chosen = best_set_;
    out.objective = best_obj_;
    return out;
  }

 private:
  bool available(int k) const {
    const auto& c = p_.candidates[k];
    return blocked_[k] == 0 && fits(used_[c.triple.pu], c.volume, p_.pu_budget[c.triple.pu]);
  }

  /// Current value plus each remaining SU's best still-available weight.
  /// Returns -inf when require_all and some SU has nothing left.
  double bound(std::size_t depth, double current) const {
    double b = current;
    for (std::size_t d = depth; d < levels_.size(); ++d) {
      double best = p_.require_all ? -kUnbounded : 0.0;
      for (int k : levels_[d]) {
        if (available(k)) {
          best = std::max(best, p_.candidates[k].weight);
          break;  // sorted by weight
        }
      }
      if (best == -kUnbounded) return -kUnbounded;
      b += best;
    }
    return b;
  }

  void choose(int k, int dir) {
    for (int other : p_.conflicts[k]) blocked_[other] += dir;
    const auto& c = p_.candidates[k];
    used_[c.triple.pu] += dir * c.volume;
  }

  void leaf() {
    std::vector<int> idx = stack_;
    const double obj = canonical_objective(p_, idx);
    auto set = triples_of(p_, idx);
    if (improves(obj, set, best_obj_, best_set_, have_best_)) {
      have_best_ = true;
      best_obj_ = obj;
      best_set_ = std::move(set);
      best_idx_ = std::move(idx);
    }
  }

  void dfs(std::size_t depth, double current) {
    ++nodes_;
    if (depth == levels_.size()) {
      leaf();
      return;
    }
    if (have_best_) {
      const double b = bound(depth, current);
      if (b < best_obj_ - kTieTol * std::max(1.0, std::abs(best_obj_))) return;
    }
    for (int k : levels_[depth]) {
      if (!available(k)) continue;
      choose(k, +1);
      stack_.push_back(k);
      dfs(depth + 1, current + p_.candidates[k].weight);
      stack_.pop_back();
      choose(k, -1);
    }
    if (!p_.require_all) dfs(depth + 1, current);
  }

  const AssignmentProblem& p_;
  std::vector<std::vector<int>> levels_;
  std::vector<int> blocked_;
  std::vector<double> used_;
  std::vector<int> stack_;
  bool impossible_ = false;
  bool have_best_ = false;
  double best_obj_ = 0.0;
  std::vector<Triple> best_set_;
  std::vector<int> best_idx_;
  long nodes_ = 0;
};

}  // namespace

int AssignmentProblem::add(const Candidate& c) {
  if (c.triple.su < 0 || c.triple.su >= n_su || c.triple.pu < 0 || c.triple.pu >= n_pu) {
    throw std::out_of_range("candidate outside problem dimensions");
  }
  candidates.push_back(c);
  conflicts.emplace_back();
  return static_cast<int>(candidates.size()) - 1;
}

void AssignmentProblem::add_conflict(int a, int b) {
  if (a == b) return;
  auto link = [&](int x, int y) {
    auto& v = conflicts[x];
    if (std::find(v.begin(), v.end(), y) == v.end()) v.push_back(y);
  };
  link(a, b);
  link(b, a);
}

void AssignmentProblem::add_link_conflicts(const LinkModel& links) {
  const int n = static_cast<int>(candidates.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (links.conflicts(candidates[a].triple, candidates[b].triple)) add_conflict(a, b);
}

void AssignmentProblem::validate() const {
  if (static_cast<int>(pu_budget.size()) != n_pu) throw std::invalid_argument("problem: budget size mismatch");
  if (conflicts.size() != candidates.size()) throw std::invalid_argument("problem: conflict table size mismatch");
  for (double b : pu_budget)
    if (!(b >= 0.0)) throw std::invalid_argument("problem: negative budget");
  for (std::size_t k = 0; k < conflicts.size(); ++k)
    for (int o : conflicts[k]) {
      const auto& back = conflicts[o];
      if (std::find(back.begin(), back.end(), static_cast<int>(k)) == back.end()) {
        throw std::invalid_argument("problem: conflict relation not symmetric");
      }
    }
}

std::optional<double> inner_optimal_volume(double rho, double p, double a, double q0, double q_min, double q_cap) {
  if (!(p > 0.0) || !(a > 0.0)) throw std::domain_error("inner volume: price and availability must be > 0");
  if (q_min > q_cap) return std::nullopt;
  const double aq = std::clamp(rho / p - q0, q_min, q_cap);
  return aq / a;
}

AssignmentProblem build_centralized_problem(const NetworkScenario& s, const LinkModel& links, double price,
                                            const TrustState& trust, const std::vector<double>& q_avail,
                                            const std::function<bool(int, int)>& allowed) {
  AssignmentProblem prob;
  prob.n_su = s.n();
  prob.n_pu = s.m();
  prob.pu_budget = q_avail;
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.m(); ++j) {
      if (allowed ? !allowed(i, j) : !trust.admitted(i, j)) continue;
      for (int b = 0; b < s.channels; ++b) {
        if (!links.qos_feasible(i, j, b)) continue;
        const double a = s.a(i, j, b);
        const double rho = trust.su_to_pu(i, j);
        const auto q = inner_optimal_volume(rho, price, a, s.sus[i].q0, s.q_min(i), q_avail[j]);
        if (!q) continue;
        const double aq = a * *q;
        const double w = rho * std::log(s.sus[i].q0 + aq) - price * aq;
        prob.add({{i, j, b}, w, aq});
      }
    }
  prob.add_link_conflicts(links);
  return prob;
}

Assignment solve_exact(const AssignmentProblem& problem) {
  problem.validate();
  return BranchAndBound(problem).run();
}

bool assignment_feasible(const AssignmentProblem& problem, const std::vector<int>& indices) {
  std::vector<double> used(problem.n_pu, 0.0);
  std::vector<char> su_taken(problem.n_su, 0);
  for (std::size_t x = 0; x < indices.size(); ++x) {
    const auto& c = problem.candidates[indices[x]];
    if (su_taken[c.triple.su]) return false;
    su_taken[c.triple.su] = 1;
    if (!fits(used[c.triple.pu], c.volume, problem.pu_budget[c.triple.pu])) return false;
    used[c.triple.pu] += c.volume;
    for (std::size_t y = x + 1; y < indices.size(); ++y) {
      const auto& cf = problem.conflicts[indices[x]];
      if (std::find(cf.begin(), cf.end(), indices[y]) != cf.end()) return false;
    }
  }
  if (problem.require_all) {
    for (int i = 0; i < problem.n_su; ++i)
      if (!su_taken[i]) return false;
  }
  return true;
}

Assignment enumerate_oracle(const AssignmentProblem& problem) {
  problem.validate();
  const auto groups = by_su(problem);
  double combos = 1.0;
  for (const auto& g : groups) combos *= static_cast<double>(g.size() + 1);
  if (combos > 1e7) throw std::length_error("enumerate_oracle: instance too large");

  Assignment best;
  best.feasible = false;
  std::vector<int> current;
  bool have = false;
  long visited = 0;
  auto rec = [&](auto&& self, int su) -> void {
    if (su == problem.n_su) {
      ++visited;
      if (!assignment_feasible(problem, current)) return;
      std::vector<int> idx = current;
      const double obj = canonical_objective(problem, idx);
      auto set = triples_of(problem, idx);
      if (improves(obj, set, best.objective, best.chosen, have)) {
        have = true;
        best.objective = obj;
        best.chosen = std::move(set);
        best.indices = std::move(idx);
      }
      return;
    }
    self(self, su + 1);
    for (int k : groups[su]) {
      current.push_back(k);
      self(self, su + 1);
      current.pop_back();
    }
  };
  rec(rec, 0);
  best.feasible = have;
  best.nodes = visited;
  if (!have) best.objective = 0.0;
  return best;
}

AssignmentProblem build_channel_problem(const NetworkScenario& s, const LinkModel& links,
                                        const std::vector<AgreedPair>& pairs, double channel_price,
                                        const TrustState& trust) {
  AssignmentProblem prob;
  prob.n_su = s.n();
  prob.n_pu = s.m();
  prob.pu_budget.assign(s.m(), kUnbounded);
  for (const auto& pr : pairs) {
    for (int b = 0; b < s.channels; ++b) {
      if (!links.link_usable(pr.su, pr.pu, b)) continue;
      const double a = s.a(pr.su, pr.pu, b);
      const double w = trust.su_to_pu(pr.su, pr.pu) * std::log(s.sus[pr.su].q0 + a * pr.volume) -
                       a * (pr.volume * pr.data_price + channel_price);
      prob.add({{pr.su, pr.pu, b}, w, a * pr.volume});
    }
  }
  prob.add_link_conflicts(links);
  return prob;
}

Assignment solve_channel_assignment(const NetworkScenario& s, const std::vector<AgreedPair>& pairs,
                                    double channel_price, const TrustState& trust) {
  const LinkModel links(s);
  return solve_exact(build_channel_problem(s, links, pairs, channel_price, trust));
}

}  // namespace cdna
