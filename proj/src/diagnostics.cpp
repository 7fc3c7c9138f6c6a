#include "mtgee/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mtgee/error.hpp"
#include "mtgee/linalg.hpp"
#include "mtgee/rng.hpp"

namespace mtgee {

namespace {

constexpr std::size_t kMinStepsForVerdict = 20;

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// sum_i X_i' S_i W_i S_i X_i restricted to steps [from, to).
template <class Weight>
void accumulate(const EstimatingContext& ctx, const Vector& beta, std::size_t from, std::size_t to,
                Matrix& acc, Weight&& weight) {
  for (std::size_t i = from; i < to; ++i) {
    const TimeStep& step = ctx.data()[i];
    const ConditionalMoments cm = conditional_moments(step, beta, ctx.link());
    const Matrix sx = cm.a_diag.cwiseSqrt().asDiagonal() * step.X;
    acc.noalias() += sx.transpose() * weight(i, cm) * sx;
  }
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::supported:
      return "supported";
    case Verdict::violated:
      return "violated";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

std::vector<std::size_t> checkpoints(std::size_t n) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  const std::size_t stride = (n + 9) / 10;
  for (std::size_t k = stride; k < n; k += stride) out.push_back(k);
  out.push_back(n);
  return out;
}

ConditionReport eigen_conditions(const EstimatingContext& ctx, const Vector& beta_hat,
                                 const std::vector<double>& delta_grid) {
  for (double d : delta_grid) {
    if (!(d > 0.0 && d <= 0.5)) throw ContractError("delta grid values must lie in (0, 0.5]");
  }
  ConditionReport rep;
  rep.checkpoints = checkpoints(ctx.n());
  const auto p = static_cast<Eigen::Index>(ctx.p());
  Matrix h = Matrix::Zero(p, p);
  std::size_t done = 0;
  for (std::size_t cp : rep.checkpoints) {
    for (std::size_t i = done; i < cp; ++i) {
      const TimeStep& step = ctx.data()[i];
      const ConditionalMoments cm = conditional_moments(step, beta_hat, ctx.link());
      h.noalias() += step.X.transpose() * cm.a_diag.asDiagonal() * step.X;
    }
    done = cp;
    const Vector lambda =
        Eigen::SelfAdjointEigenSolver<Matrix>(linalg::symmetrize(h), Eigen::EigenvaluesOnly)
            .eigenvalues();
    rep.lambda_min_traj.push_back(std::max(0.0, lambda.minCoeff()));
    rep.lambda_max_traj.push_back(std::max(0.0, lambda.maxCoeff()));
  }

  const bool enough = ctx.n() >= kMinStepsForVerdict && rep.checkpoints.size() >= 2;
  const double first = rep.lambda_min_traj.empty() ? 0.0 : rep.lambda_min_traj.front();
  const double last = rep.lambda_min_traj.empty() ? 0.0 : rep.lambda_min_traj.back();
  const double scale = rep.lambda_max_traj.empty() ? 0.0 : rep.lambda_max_traj.back();
  const double zero = linalg::kRankTolerance * std::max(1.0, scale);
  if (last <= zero) {
    rep.growth_verdict = enough ? Verdict::violated : Verdict::inconclusive;
  } else if (!enough) {
    rep.growth_verdict = Verdict::inconclusive;
  } else if (first <= zero || last >= 2.0 * first) {
    rep.growth_verdict = Verdict::supported;
  } else if (last < 1.1 * first) {
    rep.growth_verdict = Verdict::violated;
  } else {
    rep.growth_verdict = Verdict::inconclusive;
  }

  for (double delta : delta_grid) {
    SDeltaSeries s;
    s.delta = delta;
    for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
      const double lmax = rep.lambda_max_traj[c];
      s.ratio.push_back(lmax > 0.0 ? rep.lambda_min_traj[c] / std::pow(lmax, 0.5 + delta) : 0.0);
    }
    if (!enough) {
      s.verdict = Verdict::inconclusive;
    } else {
      const std::size_t half = s.ratio.size() / 2;
      const double min_first = *std::min_element(s.ratio.begin(), s.ratio.begin() + half);
      const double min_second = *std::min_element(s.ratio.begin() + half, s.ratio.end());
      if (min_second <= 0.0) {
        s.verdict = Verdict::violated;
      } else if (min_second >= 0.5 * min_first) {
        s.verdict = Verdict::supported;
      } else if (min_second < 0.1 * min_first) {
        s.verdict = Verdict::violated;
      } else {
        s.verdict = Verdict::inconclusive;
      }
    }
    rep.s_delta.push_back(std::move(s));
  }
  return rep;
}

ErgodicityReport ergodicity_check(const std::vector<ClusterSeries>& replications,
                                  const Vector& beta0, Link link, const CorrProvider& provider,
                                  std::size_t min_replications) {
  if (replications.size() < std::max<std::size_t>(min_replications, 2)) {
    throw ContractError("ergodicity check needs at least " +
                        std::to_string(std::max<std::size_t>(min_replications, 2)) +
                        " replications, got " + std::to_string(replications.size()));
  }
  const std::size_t n = replications.front().size();
  for (const auto& r : replications) {
    if (r.size() != n) throw ContractError("replications must have equal length");
  }
  ErgodicityReport rep;
  rep.checkpoints = checkpoints(n);
  const auto p = static_cast<Eigen::Index>(replications.front().p());
  const std::size_t nc = rep.checkpoints.size();

  // v[r][c]: V_n(beta0) of replication r at checkpoint c.
  std::vector<std::vector<Matrix>> v(replications.size());
  for (std::size_t r = 0; r < replications.size(); ++r) {
    const EstimatingContext ctx = EstimatingContext::make(replications[r], link, provider, beta0);
    Matrix acc = Matrix::Zero(p, p);
    std::size_t done = 0;
    for (std::size_t cp : rep.checkpoints) {
      for (std::size_t i = done; i < cp; ++i) {
        const TimeStep& step = ctx.data()[i];
        const ConditionalMoments cm = conditional_moments(step, beta0, link);
        const Matrix sx = cm.a_diag.cwiseSqrt().asDiagonal() * step.X;
        const Vector score = sx.transpose() * (ctx.corr_inverse(i) * cm.eps_std);
        acc.noalias() += score * score.transpose();
      }
      done = cp;
      v[r].push_back(acc);
    }
  }

  rep.deviation.assign(nc, {});
  for (std::size_t c = 0; c < nc; ++c) {
    Matrix mean = Matrix::Zero(p, p);
    for (std::size_t r = 0; r < v.size(); ++r) mean += v[r][c];
    mean /= static_cast<double>(v.size());
    const Matrix root = linalg::inverse_sqrt_psd(mean, "averaged V_n");
    const Matrix eye = Matrix::Identity(p, p);
    for (std::size_t r = 0; r < v.size(); ++r) {
      rep.deviation[c].push_back(linalg::spectral_norm_sym(root * v[r][c] * root - eye));
    }
    rep.median.push_back(median(rep.deviation[c]));
  }
  if (n < kMinStepsForVerdict || nc < 2) {
    rep.verdict = Verdict::inconclusive;
  } else if (rep.median.back() < rep.median.front()) {
    rep.verdict = Verdict::supported;
  } else {
    rep.verdict = Verdict::violated;
  }
  return rep;
}

OptimalityReport optimality_ratios(const EstimatingContext& ctx, const Vector& beta_hat,
                                   const Matrix& true_corr) {
  const auto m = static_cast<Eigen::Index>(ctx.m());
  if (true_corr.rows() != m || true_corr.cols() != m) {
    throw ContractError("reference correlation size does not match cluster size");
  }
  const Matrix true_inv = linalg::inverse_spd(true_corr);
  OptimalityReport rep;
  rep.checkpoints = checkpoints(ctx.n());
  const auto p = static_cast<Eigen::Index>(ctx.p());
  Matrix h_star = Matrix::Zero(p, p);
  Matrix m_bar = Matrix::Zero(p, p);
  Matrix m_star = Matrix::Zero(p, p);
  std::size_t done = 0;
  for (std::size_t cp : rep.checkpoints) {
    accumulate(ctx, beta_hat, done, cp, h_star,
               [&](std::size_t i, const ConditionalMoments&) -> const Matrix& {
                 return ctx.corr_inverse(i);
               });
    accumulate(ctx, beta_hat, done, cp, m_bar,
               [&](std::size_t, const ConditionalMoments&) -> const Matrix& { return true_inv; });
    accumulate(ctx, beta_hat, done, cp, m_star, [&](std::size_t i, const ConditionalMoments&) {
      return Matrix(ctx.corr_inverse(i) * true_corr * ctx.corr_inverse(i));
    });
    done = cp;
    const double ld_bar = linalg::log_det_psd(m_bar, "Mbar_n");
    rep.det_ratio_H.push_back(std::exp(linalg::log_det_psd(h_star, "H*_n") - ld_bar));
    rep.det_ratio_M.push_back(std::exp(linalg::log_det_psd(m_star, "M*_n") - ld_bar));
  }
  return rep;
}

LeverageStats leverage(const EstimatingContext& ctx, const Vector& beta_hat) {
  const auto p = static_cast<Eigen::Index>(ctx.p());
  Matrix h = Matrix::Zero(p, p);
  for (const TimeStep& step : ctx.data()) {
    const ConditionalMoments cm = conditional_moments(step, beta_hat, ctx.link());
    h.noalias() += step.X.transpose() * cm.a_diag.asDiagonal() * step.X;
  }
  const Matrix hinv = linalg::inverse_psd(h, "cumulative information H'_n");
  double gamma = 0.0;
  for (const TimeStep& step : ctx.data()) {
    for (Eigen::Index j = 0; j < step.X.rows(); ++j) {
      const Vector x = step.X.row(j).transpose();
      gamma = std::max(gamma, x.dot(hinv * x));
    }
  }
  return {gamma, linalg::lambda_max(linalg::symmetrize(h)) * gamma};
}

std::vector<DriftPoint> perturbation_sensitivity(const ClusterSeries& data, Link link,
                                                 const CorrProvider& provider, FitMethod method,
                                                 const std::optional<Matrix>& true_corr,
                                                 const std::vector<double>& d_grid,
                                                 std::uint64_t seed) {
  if (std::find(d_grid.begin(), d_grid.end(), 0.0) == d_grid.end()) {
    throw ContractError("perturbation budget grid must include 0");
  }
  for (double d : d_grid) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ContractError("perturbation budgets must be >= 0");
  }

  struct Ratios {
    double h, m;
  };
  auto ratios_at = [&](const Estimate& est) -> std::optional<Ratios> {
    if (!true_corr) return std::nullopt;
    const OptimalityReport r = optimality_ratios(est.ctx, est.beta, *true_corr);
    return Ratios{r.det_ratio_H.back(), r.det_ratio_M.back()};
  };

  const Estimate base = estimate(data, link, provider, method);
  const auto base_ratios = ratios_at(base);

  // Unit-spectral-norm directions, one per step.
  Philox4x32 rng(seed, 0x70657274ull);
  std::vector<Matrix> direction;
  direction.reserve(data.size());
  const auto m = static_cast<Eigen::Index>(data.m());
  const auto p = static_cast<Eigen::Index>(data.p());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Matrix g(m, p);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < p; ++c) g(r, c) = rng.normal();
    const double norm = Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
    direction.push_back(norm > 0.0 ? Matrix(g / norm) : Matrix::Zero(m, p));
  }

  std::vector<DriftPoint> out;
  out.reserve(d_grid.size());
  for (double d : d_grid) {
    DriftPoint pt;
    pt.budget = d;
    if (d == 0.0) {
      const Estimate again = estimate(data, link, provider, method);
      pt.beta_drift = (again.beta - base.beta).norm();
      if (base_ratios) pt.det_ratio_drift = 0.0;
      out.push_back(pt);
      continue;
    }
    std::vector<TimeStep> steps = data.steps();
    double scale = d;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      scale *= 0.5;
      steps[i].X += scale * direction[i];
    }
    const Estimate pert = estimate(ClusterSeries(data.m(), data.p(), std::move(steps)), link,
                                   provider, method);
    pt.beta_drift = (pert.beta - base.beta).norm();
    if (base_ratios) {
      const auto r = ratios_at(pert);
      pt.det_ratio_drift = std::max(std::abs(r->h / base_ratios->h - 1.0),
                                    std::abs(r->m / base_ratios->m - 1.0));
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace mtgee
