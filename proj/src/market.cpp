#include "cdna/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cdna {

namespace {

constexpr double kMaxPrice = 1e12;

void require_price(double p) {
  if (!(p > 0.0)) throw std::domain_error("price must be > 0");
}

}  // namespace

double su_utility_dist(double rho, double q0, double a, double q, double price, double sigma) {
  const double arg = q0 + a * q;
  if (!(arg > 0.0)) throw std::domain_error("SU utility: nonpositive log argument");
  return rho * std::log(arg) - (1.0 - sigma) * price * a * q;
}

double pu_utility_dist(double rho, double q0_pu, double a, double q, double price, double eta, double e_j) {
  const double left = q0_pu - a * q;
  if (!(left > 0.0)) throw std::domain_error("PU utility: data exhausted");
  return rho * std::log(left) + eta * price * a * q - e_j;
}

double demand(double rho, double price, double sigma, double q0, double a) {
  require_price(price);
  if (!(sigma < 1.0)) throw std::domain_error("demand: sigma = 1 makes demand unbounded");
  if (!(a > 0.0)) throw std::domain_error("demand: availability must be > 0");
  return std::max(0.0, (rho / (price * (1.0 - sigma)) - q0) / a);
}

double supply(double rho, double price, double eta, double q0_pu, double a) {
  require_price(price);
  if (!(eta > 0.0)) throw std::domain_error("supply: eta must be > 0");
  if (!(a > 0.0)) throw std::domain_error("supply: availability must be > 0");
  return std::max(0.0, (q0_pu - rho / (price * eta)) / a);
}

double learning_rate_bound(double a, double price, double eta, double sigma, double rho) {
  if (!(rho > 0.0)) throw std::domain_error("learning rate bound: rho must be > 0");
  return 1.0 + a * price * price * eta * (1.0 - sigma) / (rho * (eta + 1.0 - sigma));
}

double Market::total_demand(double p) const {
  double sum = 0.0;
  for (const auto& b : buyers) sum += demand(b.rho, p, b.sigma, b.q0, b.a);
  return sum;
}

double Market::total_supply(double p) const {
  double sum = 0.0;
  for (const auto& s : sellers) sum += supply(s.rho, p, s.eta, s.q0, s.a);
  return sum;
}

double Market::slope(double p) const {
  require_price(p);
  double d = 0.0;
  for (const auto& b : buyers)
    if (demand(b.rho, p, b.sigma, b.q0, b.a) > 0.0) d -= b.rho / ((1.0 - b.sigma) * b.a * p * p);
  for (const auto& s : sellers)
    if (supply(s.rho, p, s.eta, s.q0, s.a) > 0.0) d -= s.rho / (s.eta * s.a * p * p);
  return d;
}

double Market::published_bound(double p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : buyers)
    for (const auto& s : sellers) best = std::min(best, learning_rate_bound(b.a, p, s.eta, b.sigma, b.rho));
  return std::isinf(best) ? 1.0 : best;
}

double Market::rate(double p, RatePolicy policy) const {
  if (policy == RatePolicy::HalfPublishedBound) return 0.5 * published_bound(p);
  const double s = std::abs(slope(p));
  return s > 0.0 ? 1.0 / s : 0.0;
}

double Market::unfloored_clearing_price() const {
  double num = 0.0, den = 0.0;
  for (const auto& b : buyers) {
    num += b.rho / ((1.0 - b.sigma) * b.a);
    den += b.q0 / b.a;
  }
  for (const auto& s : sellers) {
    num += s.rho / (s.eta * s.a);
    den += s.q0 / s.a;
  }
  return den > 0.0 ? num / den : 0.0;
}

double update_price(double price, double rate, double excess) { return std::max(kMinPrice, price + rate * excess); }

PriceIteration iterate_price(const Market& market, double p0, RatePolicy policy, double tol, int max_iters) {
  PriceIteration r;
  double p = std::max(kMinPrice, p0);
  r.trace.push_back(p);
  for (int it = 0; it < max_iters; ++it) {
    const double e = market.excess(p);
    double next;
    if (policy == RatePolicy::Jacobian) {
      const double w = market.rate(p, policy);
      next = w > 0.0 ? update_price(p, w, e) : (e > 0.0 ? 2.0 * p : e < 0.0 ? 0.5 * p : p);
      next = std::clamp(next, std::max(kMinPrice, 0.5 * p), 2.0 * p);
    } else {
      next = update_price(p, market.rate(p, policy), e);
    }
    r.iterations = it + 1;
    r.trace.push_back(next);
    const double step = std::abs(next - p);
    p = next;
    if (!std::isfinite(p) || p > kMaxPrice) break;
    if (step < tol) {
      r.converged = true;
      break;
    }
  }
  r.price = p;
  r.excess = std::isfinite(p) ? market.excess(p) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace cdna
