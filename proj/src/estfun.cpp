#include "mtgee/estfun.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

#include "mtgee/error.hpp"
#include "mtgee/linalg.hpp"

namespace mtgee {

EstimatingContext::EstimatingContext(ClusterSeries data, Link link, std::vector<Matrix> corr)
    : data_(std::move(data)), link_(link), corr_(std::move(corr)) {
  if (corr_.size() != data_.size()) {
    throw ContractError("one working correlation per time step is required");
  }
  corr_inv_.reserve(corr_.size());
  const auto m = static_cast<Eigen::Index>(data_.m());
  for (std::size_t i = 0; i < corr_.size(); ++i) {
    const Matrix& r = corr_[i];
    if (r.rows() != m || r.cols() != m) {
      throw ContractError("working correlation size does not match cluster size");
    }
    // Fixed providers repeat one matrix; reuse its inverse.
    if (i > 0 && r == corr_[i - 1]) {
      corr_inv_.push_back(corr_inv_.back());
    } else {
      corr_inv_.push_back(linalg::inverse_spd(r));
    }
  }
}

EstimatingContext EstimatingContext::make(ClusterSeries data, Link link,
                                          const CorrProvider& provider,
                                          std::optional<Vector> plug_in_beta) {
  if (provider.adaptive() && !plug_in_beta) {
    plug_in_beta = working_independence_root(data, link);
  }
  auto corr = provider.sequence(data, link, plug_in_beta);
  return EstimatingContext(std::move(data), link, std::move(corr));
}

Vector eval_g(const EstimatingContext& ctx, const Vector& beta) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(ctx.p()));
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const TimeStep& step = ctx.data()[i];
    const ConditionalMoments cm = conditional_moments(step, beta, ctx.link());
    const Vector v = ctx.corr_inverse(i) * cm.eps_std;
    g.noalias() += step.X.transpose() * (cm.a_diag.cwiseSqrt().cwiseProduct(v));
  }
  return g;
}

namespace {

Matrix analytic_jacobian(const EstimatingContext& ctx, const Vector& beta) {
  const auto p = static_cast<Eigen::Index>(ctx.p());
  const auto m = static_cast<Eigen::Index>(ctx.m());
  Matrix d = Matrix::Zero(p, p);
  Vector s(m), c(m), w(m);
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const TimeStep& step = ctx.data()[i];
    const Vector theta = step.X * beta;
    Vector u(m);
    Vector d2(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const LinkValues lv = ctx.link().eval(theta[j]);
      if (!(lv.d1 > 0.0)) {
        std::ostringstream os;
        os << "mu'(theta) = " << lv.d1 << " is not positive at component " << j;
        throw ModelViolation(os.str(), static_cast<std::size_t>(j), theta[j]);
      }
      const double r = step.y[j] - lv.mu;
      s[j] = std::sqrt(lv.d1);
      u[j] = r / s[j];
      d2[j] = lv.d2;
      c[j] = s[j] + r * lv.d2 / (2.0 * lv.d1 * s[j]);
    }
    const Matrix& rinv = ctx.corr_inverse(i);
    const Vector v = rinv * u;
    for (Eigen::Index j = 0; j < m; ++j) w[j] = v[j] * d2[j] / (2.0 * s[j]);
    const Matrix sx = s.asDiagonal() * step.X;
    d.noalias() += sx.transpose() * rinv * (c.asDiagonal() * step.X);
    d.noalias() -= step.X.transpose() * w.asDiagonal() * step.X;
  }
  return d;
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Matrix eval_jacobian(const EstimatingContext& ctx, const Vector& beta, JacobianMode mode,
                     double fd_step) {
  if (beta.size() != static_cast<Eigen::Index>(ctx.p())) {
    throw ContractError("beta length does not match parameter dimension");
  }
  if (mode == JacobianMode::analytic) return analytic_jacobian(ctx, beta);
  if (!(fd_step > 0.0)) throw ContractError("finite-difference step must be positive");
  const auto p = beta.size();
  Matrix d(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double h = fd_step * std::max(1.0, std::abs(beta[k]));
    Vector up = beta, dn = beta;
    up[k] += h;
    dn[k] -= h;
    d.col(k) = -(eval_g(ctx, up) - eval_g(ctx, dn)) / (up[k] - dn[k]);
  }
  return d;
}

SolveReport solve_newton(const EstimatingContext& ctx, const Vector& beta_init,
                         const NewtonOptions& options) {
  if (beta_init.size() != static_cast<Eigen::Index>(ctx.p())) {
    throw ContractError("beta_init length does not match parameter dimension");
  }
  SolveReport rep;
  Vector beta = beta_init;
  Vector g = eval_g(ctx, beta);
  double norm = inf_norm(g);
  rep.trace.push_back({beta, norm});

  // The Jacobian is checked at every iterate, the last one included, so a
  // root of an unidentified equation (g identically zero) still fails.
  for (;;) {
    const Matrix d = eval_jacobian(ctx, beta);
    Eigen::FullPivLU<Matrix> lu(d);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
      std::ostringstream os;
      os << "singular Jacobian at iteration " << rep.iterations << " (rank " << lu.rank() << " of "
         << d.rows() << ", ||g||_inf = " << norm << ", beta = " << beta.transpose() << ")";
      throw SolverFailure(os.str());
    }
    if (norm <= options.tol || rep.iterations >= options.max_iter) break;
    const Vector step = lu.solve(g);
    double t = 1.0;
    bool accepted = false;
    for (std::size_t h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      const Vector cand = beta + t * step;
      Vector gc;
      try {
        gc = eval_g(ctx, cand);
      } catch (const DomainError&) {
        continue;
      } catch (const ModelViolation&) {
        continue;
      }
      const double nc = inf_norm(gc);
      if (nc < norm) {
        beta = cand;
        g = std::move(gc);
        norm = nc;
        accepted = true;
        break;
      }
    }
    ++rep.iterations;
    if (!accepted) break;
    rep.trace.push_back({beta, norm});
  }
  rep.beta_hat = beta;
  rep.final_residual_norm = norm;
  rep.converged = norm <= options.tol;
  return rep;
}

Vector solve_linear(const EstimatingContext& ctx) {
  if (ctx.link() != Link::identity()) {
    throw ContractError("closed-form solution requires the identity link");
  }
  const auto p = static_cast<Eigen::Index>(ctx.p());
  Matrix h = Matrix::Zero(p, p);
  Vector b = Vector::Zero(p);
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    const TimeStep& step = ctx.data()[i];
    const Matrix wx = ctx.corr_inverse(i) * step.X;
    h.noalias() += step.X.transpose() * wx;
    b.noalias() += wx.transpose() * step.y;
  }
  return linalg::solve_psd(h, b, "normal matrix sum X'R^{-1}X");
}

Vector independence_estimate(const ClusterSeries& data) {
  const auto p = static_cast<Eigen::Index>(data.p());
  Matrix h = Matrix::Zero(p, p);
  Vector b = Vector::Zero(p);
  for (const TimeStep& step : data) {
    h.noalias() += step.X.transpose() * step.X;
    b.noalias() += step.X.transpose() * step.y;
  }
  return linalg::solve_psd(h, b, "normal matrix sum X'X");
}

TwoStepResult fit_two_step(const ClusterSeries& data, const TwoStepOptions& options) {
  const std::size_t n = data.size();
  if (n < 3) throw ContractError("two-step estimator needs at least 3 time steps");
  const auto m = static_cast<Eigen::Index>(data.m());
  const auto p = static_cast<Eigen::Index>(data.p());
  std::size_t warmup = std::max<std::size_t>(options.empirical.warmup_steps, 1);
  if (options.empirical.rank_gate) warmup = std::max(warmup, static_cast<std::size_t>(m + p));

  // Running sums over the folded steps, enough to form
  // sum_l (y_l - X_l b)(y_l - X_l b)' for any b without revisiting the data:
  //   S_yy - sum_k b_k (C_k + C_k') + sum_{k,k'} b_k b_k' D_{kk'}.
  Matrix xtx = Matrix::Zero(p, p);
  Vector xty = Vector::Zero(p);
  Matrix s_yy = Matrix::Zero(m, m);
  std::vector<Matrix> c_k(static_cast<std::size_t>(p), Matrix::Zero(m, m));
  std::vector<Matrix> d_kk(static_cast<std::size_t>(p * p), Matrix::Zero(m, m));

  TwoStepResult out;
  out.corr_trace.reserve(n);
  const Matrix eye = Matrix::Identity(m, m);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t folded = i;  // steps before step i+1
    if (folded < warmup) {
      out.corr_trace.push_back(eye);
    } else {
      Vector b;
      try {
        b = linalg::solve_psd(xtx, xty, "sum X'X");
      } catch (const RankDeficiency&) {
        out.corr_trace.push_back(eye);
        ++out.identity_fallbacks;
        b.resize(0);
      }
      if (b.size() == p) {
        Matrix sum = s_yy;
        for (Eigen::Index k = 0; k < p; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          sum -= b[k] * (c_k[ku] + c_k[ku].transpose());
          for (Eigen::Index l = 0; l < p; ++l) {
            sum += b[k] * b[l] * d_kk[static_cast<std::size_t>(k * p + l)];
          }
        }
        out.corr_trace.push_back(
            stabilize_empirical(sum / static_cast<double>(folded), options.empirical));
      }
    }
    const TimeStep& step = data[i];
    xtx.noalias() += step.X.transpose() * step.X;
    xty.noalias() += step.X.transpose() * step.y;
    s_yy.noalias() += step.y * step.y.transpose();
    for (Eigen::Index k = 0; k < p; ++k) {
      c_k[static_cast<std::size_t>(k)].noalias() += step.y * step.X.col(k).transpose();
      for (Eigen::Index l = 0; l < p; ++l) {
        d_kk[static_cast<std::size_t>(k * p + l)].noalias() +=
            step.X.col(k) * step.X.col(l).transpose();
      }
    }
  }
  EstimatingContext ctx(data, Link::identity(), out.corr_trace);
  out.beta_tilde = solve_linear(ctx);
  return out;
}

std::string_view to_string(FitMethod method) {
  switch (method) {
    case FitMethod::newton:
      return "newton";
    case FitMethod::linear:
      return "linear";
    case FitMethod::two_step:
      return "two_step";
  }
  return "unknown";
}

FitMethod fit_method_from_string(std::string_view name) {
  if (name == "newton") return FitMethod::newton;
  if (name == "linear") return FitMethod::linear;
  if (name == "two_step" || name == "two-step") return FitMethod::two_step;
  throw ContractError("unknown fit method '" + std::string(name) + "'");
}

Vector working_independence_root(const ClusterSeries& data, Link link,
                                 const NewtonOptions& options) {
  if (link == Link::identity()) return independence_estimate(data);
  EstimatingContext ind = EstimatingContext::make(data, link, CorrProvider::independence());
  const SolveReport rep =
      solve_newton(ind, Vector::Zero(static_cast<Eigen::Index>(data.p())), options);
  if (!rep.converged) {
    throw SolverFailure("working-independence Newton fit did not converge in " +
                        std::to_string(rep.iterations) + " iterations");
  }
  return rep.beta_hat;
}

Estimate estimate(const ClusterSeries& data, Link link, const CorrProvider& provider,
                  FitMethod method, const NewtonOptions& newton, const TwoStepOptions& two_step) {
  if (method != FitMethod::newton && link != Link::identity()) {
    throw ContractError("method '" + std::string(to_string(method)) +
                        "' requires the identity link, got '" +
                        std::string(to_string(link.kind())) + "'");
  }
  switch (method) {
    case FitMethod::linear: {
      EstimatingContext ctx = EstimatingContext::make(data, link, provider);
      Vector beta = solve_linear(ctx);
      return {std::move(beta), std::move(ctx), std::nullopt, 0};
    }
    case FitMethod::two_step: {
      TwoStepResult ts = fit_two_step(data, two_step);
      EstimatingContext ctx(data, link, std::move(ts.corr_trace));
      return {std::move(ts.beta_tilde), std::move(ctx), std::nullopt, ts.identity_fallbacks};
    }
    case FitMethod::newton: {
      const Vector init = working_independence_root(data, link, newton);
      EstimatingContext ctx = EstimatingContext::make(data, link, provider, init);
      SolveReport rep = solve_newton(ctx, init, newton);
      Vector beta = rep.beta_hat;
      return {std::move(beta), std::move(ctx), std::move(rep), 0};
    }
  }
  throw ContractError("invalid fit method");
}

}  // namespace mtgee
