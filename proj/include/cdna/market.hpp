// Demand/supply pricing of the distributed scheme.
#pragma once

#include <vector>

namespace cdna {

/// ρ log(Q_oi + a q) − (1 − σ) p a q.
double su_utility_dist(double rho, double q0, double a, double q, double price, double sigma);
/// ρ log(Q_oj − a q) + η p a q − e_j.
double pu_utility_dist(double rho, double q0_pu, double a, double q, double price, double eta, double e_j);

/// SU demand (1/a)(ρ / (p(1 − σ)) − Q_oi), floored at 0.
double demand(double rho, double price, double sigma, double q0, double a);
/// PU supply (1/a)(Q_oj − ρ / (p η)), floored at 0.
double supply(double rho, double price, double eta, double q0_pu, double a);

/// Published stability bound on the learning rate:
/// 1 + a p² η (1 − σ) / (ρ (η + 1 − σ)).
double learning_rate_bound(double a, double price, double eta, double sigma, double rho);

enum class RatePolicy {
  HalfPublishedBound,  // ϖ = learning_rate_bound / 2
  Jacobian,            // ϖ = 1 / |dE/dp| at the current price
};

struct DemandTerm {
  double rho = 1.0;
  double sigma = 0.7;
  double q0 = 10.0;
  double a = 1.0;
};
struct SupplyTerm {
  double rho = 1.0;
  double eta = 0.7;
  double q0 = 10.0;
  double a = 1.0;
};

/// One (PU, channel) market: each buyer and each competing seller counted once.
struct Market {
  std::vector<DemandTerm> buyers;
  std::vector<SupplyTerm> sellers;

  double total_demand(double p) const;
  double total_supply(double p) const;
  double excess(double p) const { return total_demand(p) - total_supply(p); }
  /// dE/dp of the excess over the terms that are not floored at p.
  double slope(double p) const;
  /// Smallest published bound over all buyer/seller combinations.
  double published_bound(double p) const;
  double rate(double p, RatePolicy policy) const;
  /// Price where demand meets supply, ignoring the floors; 0 when undefined.
  double unfloored_clearing_price() const;
};

inline constexpr double kMinPrice = 1e-6;

/// p + ϖ (ΣD − ΣS), floored at kMinPrice.
double update_price(double price, double rate, double excess);

struct PriceIteration {
  double price = 0.0;
  double excess = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// Iterates update_price until |Δp| < tol. The Jacobian policy limits each
/// move to a factor of two so a floored excess cannot throw the price far
/// away. Stops early (not converged) when the price leaves [kMinPrice, 1e12].
PriceIteration iterate_price(const Market& market, double p0, RatePolicy policy, double tol = 1e-6,
                             int max_iters = 10000);

}  // namespace cdna
