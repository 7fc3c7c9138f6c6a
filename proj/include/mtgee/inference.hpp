#pragma once

#include <vector>

#include "mtgee/estfun.hpp"

namespace mtgee {

// Sandwich covariance Psi = H^{-1} M H^{-1} with
//   H = sum X' A^{1/2} R^{-1} A^{1/2} X,
//   M = sum X' A^{1/2} R^{-1} e e' R^{-1} A^{1/2} X,  e = A^{-1/2}(y - mu(beta_hat)).
struct SandwichEstimate {
  Matrix H_tilde;
  Matrix M_tilde;
  Matrix Psi_tilde;
  Vector se;
};

SandwichEstimate sandwich(const EstimatingContext& ctx, const Vector& beta_hat);

// Inverse standard normal CDF, accurate to about 1e-15 in (0, 1).
double normal_quantile(double p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Large-sample interval for lambda'beta at the given two-sided level:
// lambda'beta_hat -/+ c sqrt(lambda' Psi lambda). lambda must be unit length.
Interval confidence_interval(const SandwichEstimate& est, const Vector& beta_hat,
                             const Vector& lambda, double level);

// Intervals for each coordinate of beta.
std::vector<Interval> component_intervals(const SandwichEstimate& est, const Vector& beta_hat,
                                          double level);

// mu(X_next beta_hat), row-wise.
Vector predict_next(const Matrix& x_next, const Vector& beta_hat, Link link);

}  // namespace mtgee
