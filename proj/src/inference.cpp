#include "mtgee/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mtgee/error.hpp"
#include "mtgee/linalg.hpp"

namespace mtgee {

SandwichEstimate sandwich(const EstimatingContext& ctx, const Vector& beta_hat) {
  const auto p = static_cast<Eigen::Index>(ctx.p());
  Matrix h = Matrix::Zero(p, p);
  Matrix meat = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const TimeStep& step = ctx.data()[i];
    const ConditionalMoments cm = conditional_moments(step, beta_hat, ctx.link());
    const Matrix sx = cm.a_diag.cwiseSqrt().asDiagonal() * step.X;
    const Matrix& rinv = ctx.corr_inverse(i);
    h.noalias() += sx.transpose() * rinv * sx;
    const Vector score = sx.transpose() * (rinv * cm.eps_std);
    meat.noalias() += score * score.transpose();
  }
  SandwichEstimate est;
  est.H_tilde = linalg::symmetrize(h);
  est.M_tilde = linalg::symmetrize(meat);
  const Matrix hinv = linalg::inverse_psd(est.H_tilde, "bread matrix H");
  est.Psi_tilde = linalg::symmetrize(hinv * est.M_tilde * hinv);
  est.se = est.Psi_tilde.diagonal().cwiseMax(0.0).cwiseSqrt();
  return est;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ContractError("normal_quantile: probability outside [0, 1]");
  }
  // Acklam's rational approximation followed by one Halley step on the CDF.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

Interval confidence_interval(const SandwichEstimate& est, const Vector& beta_hat,
                             const Vector& lambda, double level) {
  if (lambda.size() != beta_hat.size() || est.Psi_tilde.rows() != beta_hat.size()) {
    throw ContractError("confidence_interval: dimension mismatch");
  }
  if (std::abs(lambda.norm() - 1.0) > 1e-9) {
    throw ContractError("confidence_interval: lambda must have unit norm");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw ContractError("confidence_interval: level must lie in (0, 1)");
  }
  const double c = normal_quantile(1.0 - (1.0 - level) / 2.0);
  const double center = lambda.dot(beta_hat);
  const double var = std::max(0.0, lambda.dot(est.Psi_tilde * lambda));
  const double half = c * std::sqrt(var);
  return {center - half, center + half};
}

std::vector<Interval> component_intervals(const SandwichEstimate& est, const Vector& beta_hat,
                                          double level) {
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(beta_hat.size()));
  for (Eigen::Index k = 0; k < beta_hat.size(); ++k) {
    out.push_back(confidence_interval(est, beta_hat, Vector::Unit(beta_hat.size(), k), level));
  }
  return out;
}

Vector predict_next(const Matrix& x_next, const Vector& beta_hat, Link link) {
  if (x_next.cols() != beta_hat.size()) {
    throw ContractError("predict_next: X has " + std::to_string(x_next.cols()) +
                        " columns but beta has " + std::to_string(beta_hat.size()));
  }
  const Vector theta = x_next * beta_hat;
  Vector out(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) out[j] = link.mean(theta[j]);
  return out;
}

}  // namespace mtgee
