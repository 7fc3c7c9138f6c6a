#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtgee/diagnostics.hpp"
#include "mtgee/estfun.hpp"
#include "mtgee/inference.hpp"

namespace mtgee {

struct DiagnosticsOptions {
  bool enabled = false;
  std::vector<double> delta_grid{0.1, 0.25, 0.5};
  // Reference correlation for the determinant ratios; ratios are skipped without it.
  std::optional<Matrix> true_corr;
  // Perturbation budgets; empty skips the perturbation study.
  std::vector<double> d_grid;
  std::uint64_t seed = 1;
};

struct DiagnosticsBundle {
  ConditionReport conditions;
  LeverageStats leverage;
  std::optional<OptimalityReport> optimality;
};

struct FitOptions {
  FitMethod method = FitMethod::newton;
  NewtonOptions newton{};
  TwoStepOptions two_step{};
  double level = 0.95;
  DiagnosticsOptions diagnostics{};
};

struct FitResult {
  FitMethod method = FitMethod::newton;
  Link link;
  std::string corr_label;
  std::size_t n = 0, m = 0, p = 0;
  Vector beta_hat;
  SandwichEstimate sandwich;
  double level = 0.95;
  std::vector<Interval> intervals;
  std::optional<SolveReport> solve;
  // Per-step working matrices of the two-step estimator (empty otherwise).
  std::vector<Matrix> corr_trace;
  std::size_t identity_fallbacks = 0;
  std::optional<DiagnosticsBundle> diagnostics;
};

// Point estimate, sandwich covariance, component intervals, and optionally
// the diagnostics bundle.
FitResult fit(const ClusterSeries& data, Link link, const CorrProvider& provider,
              const FitOptions& options = {});

}  // namespace mtgee
