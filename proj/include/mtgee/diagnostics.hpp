#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mtgee/estfun.hpp"

namespace mtgee {

// Finite-sample verdicts on asymptotic conditions. They come from heuristic
// growth tests and never amount to proofs.
enum class Verdict { supported, violated, inconclusive };

std::string_view to_string(Verdict v);

// Checkpoints ceil(n/10)*k for k = 1, 2, ..., with n itself always last.
std::vector<std::size_t> checkpoints(std::size_t n);

struct SDeltaSeries {
  double delta = 0.0;
  // lambda_min(H'_n) / lambda_max(H'_n)^{1/2 + delta} at each checkpoint.
  std::vector<double> ratio;
  Verdict verdict = Verdict::inconclusive;
};

struct ErgodicityReport {
  std::vector<std::size_t> checkpoints;
  // deviation[c][r] = ||M^{-1/2} V_r M^{-1/2} - I||_2 at checkpoint c, replication r.
  std::vector<std::vector<double>> deviation;
  std::vector<double> median;
  Verdict verdict = Verdict::inconclusive;
};

struct ConditionReport {
  std::vector<std::size_t> checkpoints;
  std::vector<double> lambda_min_traj;
  std::vector<double> lambda_max_traj;
  // Growth: lambda_min of the cumulative information grows without bound.
  Verdict growth_verdict = Verdict::inconclusive;
  std::vector<SDeltaSeries> s_delta;
  std::optional<ErgodicityReport> ergodicity;
};

// Cumulative information H'_n = sum X' A X at beta_hat, traced over checkpoints.
// Growth is "supported" when lambda_min at least doubles from the first to the
// last checkpoint, "violated" when it stays at zero or grows by less than
// 10%. Each delta ratio is "supported" when the ratio's minimum over the second
// half of the checkpoints is at least half its minimum over the first half,
// "violated" when it falls below a tenth. Fewer than 20 steps is inconclusive.
ConditionReport eigen_conditions(const EstimatingContext& ctx, const Vector& beta_hat,
                                 const std::vector<double>& delta_grid);

// Across-replication estimate of M_n from V_n(beta0), and the spread of each
// replication's normalized V_n around the identity. Requires at least
// `min_replications` series of equal length.
ErgodicityReport ergodicity_check(const std::vector<ClusterSeries>& replications,
                                  const Vector& beta0, Link link, const CorrProvider& provider,
                                  std::size_t min_replications = 50);

struct DriftPoint {
  double budget = 0.0;
  double beta_drift = 0.0;
  // max over both ratios of |ratio(perturbed) / ratio(unperturbed) - 1|;
  // empty without a reference correlation.
  std::optional<double> det_ratio_drift;
};

struct OptimalityReport {
  std::vector<std::size_t> checkpoints;
  std::vector<double> det_ratio_H;  // det H*_n / det Mbar_n
  std::vector<double> det_ratio_M;  // det M*_n / det Mbar_n
  std::vector<DriftPoint> perturb_drift;
};

// Sample-path versions of H*_n, M*_n and Mbar_n, with `true_corr` as the
// reference correlation, and their determinant ratios at each checkpoint.
OptimalityReport optimality_ratios(const EstimatingContext& ctx, const Vector& beta_hat,
                                   const Matrix& true_corr);

struct LeverageStats {
  double gamma_prime = 0.0;  // max_{i,j} x_ij' (H'_n)^{-1} x_ij
  double a_prime = 0.0;      // lambda_max(H'_n) * gamma_prime
};

LeverageStats leverage(const EstimatingContext& ctx, const Vector& beta_hat);

// Refits on X_i + delta_i for each budget d, with ||delta_i||_2 = d * 2^{-i}
// (1-based i) in a random direction drawn once per seed and shared across
// budgets. d = 0 refits on the untouched data.
std::vector<DriftPoint> perturbation_sensitivity(const ClusterSeries& data, Link link,
                                                 const CorrProvider& provider, FitMethod method,
                                                 const std::optional<Matrix>& true_corr,
                                                 const std::vector<double>& d_grid,
                                                 std::uint64_t seed);

}  // namespace mtgee
