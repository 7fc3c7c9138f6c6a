#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "mtgee/corr.hpp"
#include "mtgee/model.hpp"

namespace mtgee {

// Data, link and the per-step working correlations, with the inverses
// precomputed. The working matrices are held fixed in beta.
class EstimatingContext {
 public:
  EstimatingContext(ClusterSeries data, Link link, std::vector<Matrix> corr);

  // Materializes `provider` over `data`. An adaptive provider without a
  // plug-in beta is folded at the working-independence estimate.
  static EstimatingContext make(ClusterSeries data, Link link, const CorrProvider& provider,
                                std::optional<Vector> plug_in_beta = std::nullopt);

  const ClusterSeries& data() const { return data_; }
  Link link() const { return link_; }
  std::size_t n() const { return data_.size(); }
  std::size_t m() const { return data_.m(); }
  std::size_t p() const { return data_.p(); }

  const Matrix& corr(std::size_t i) const { return corr_[i]; }
  const Matrix& corr_inverse(std::size_t i) const { return corr_inv_[i]; }
  const std::vector<Matrix>& corr_sequence() const { return corr_; }

 private:
  ClusterSeries data_;
  Link link_;
  std::vector<Matrix> corr_;
  std::vector<Matrix> corr_inv_;
};

// sum_i X_i' A_i^{1/2} R_i^{-1} A_i^{-1/2} (y_i - mu_i(beta)), summed in step order.
Vector eval_g(const EstimatingContext& ctx, const Vector& beta);

enum class JacobianMode { analytic, finite_diff };

// D_n(beta) = -dg/dbeta'. The finite-difference step is relative:
// h_k = fd_step * max(1, |beta_k|).
Matrix eval_jacobian(const EstimatingContext& ctx, const Vector& beta,
                     JacobianMode mode = JacobianMode::analytic, double fd_step = 1e-6);

struct NewtonOptions {
  double tol = 1e-8;
  std::size_t max_iter = 50;
  std::size_t max_halvings = 20;
};

struct TracePoint {
  Vector beta;
  double g_norm;
};

struct SolveReport {
  Vector beta_hat;
  std::size_t iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

// Damped Newton on g(beta) = 0 with ||g||_inf as the convergence measure.
// Running out of iterations yields converged == false; a singular Jacobian
// throws SolverFailure.
SolveReport solve_newton(const EstimatingContext& ctx, const Vector& beta_init,
                         const NewtonOptions& options = {});

// Closed form (sum X'R^{-1}X)^{-1} sum X'R^{-1}y for the identity link.
Vector solve_linear(const EstimatingContext& ctx);

// Working-independence closed form sum X'X \ sum X'y (any link's starting point).
Vector independence_estimate(const ClusterSeries& data);

struct TwoStepOptions {
  EmpiricalOptions empirical{};
};

struct TwoStepResult {
  Vector beta_tilde;
  // Working matrix used at each step: entry i-1 is the matrix for step i,
  // estimated from steps before i.
  std::vector<Matrix> corr_trace;
  // Steps whose working matrix fell back to the identity because the
  // preliminary independence fit on the earlier steps was rank deficient.
  std::size_t identity_fallbacks = 0;
};

// Two-step pseudo-likelihood estimator for the identity link: a running
// working-independence fit supplies the residual average used as the
// working matrix for the next step; the final fit is the closed form.
TwoStepResult fit_two_step(const ClusterSeries& data, const TwoStepOptions& options = {});

enum class FitMethod { newton, linear, two_step };

std::string_view to_string(FitMethod method);
FitMethod fit_method_from_string(std::string_view name);

// Root of the working-independence equation: the closed form for the
// identity link, Newton from zero otherwise.
Vector working_independence_root(const ClusterSeries& data, Link link,
                                 const NewtonOptions& options = {});

// Point estimate plus the context it was computed in.
struct Estimate {
  Vector beta;
  EstimatingContext ctx;
  std::optional<SolveReport> solve;
  std::size_t identity_fallbacks = 0;
};

// Dispatches on `method`. `linear` and `two_step` require the identity link
// (ContractError otherwise); `two_step` ignores `provider`. Newton starts
// from the working-independence root.
Estimate estimate(const ClusterSeries& data, Link link, const CorrProvider& provider,
                  FitMethod method, const NewtonOptions& newton = {},
                  const TwoStepOptions& two_step = {});

}  // namespace mtgee
