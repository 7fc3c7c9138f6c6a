#include "mtgee/fit.hpp"

#include "mtgee/error.hpp"

namespace mtgee {

FitResult fit(const ClusterSeries& data, Link link, const CorrProvider& provider,
              const FitOptions& options) {
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw ContractError("confidence level must lie in (0, 1)");
  }
  Estimate est = estimate(data, link, provider, options.method, options.newton, options.two_step);

  FitResult res;
  res.method = options.method;
  res.link = link;
  res.corr_label = options.method == FitMethod::two_step ? "two_step" : provider.label();
  res.n = data.size();
  res.m = data.m();
  res.p = data.p();
  res.beta_hat = est.beta;
  res.sandwich = sandwich(est.ctx, est.beta);
  res.level = options.level;
  res.intervals = component_intervals(res.sandwich, est.beta, options.level);
  res.solve = est.solve;
  res.identity_fallbacks = est.identity_fallbacks;
  if (options.method == FitMethod::two_step) res.corr_trace = est.ctx.corr_sequence();

  const DiagnosticsOptions& dopt = options.diagnostics;
  if (dopt.enabled) {
    DiagnosticsBundle bundle;
    bundle.conditions = eigen_conditions(est.ctx, est.beta, dopt.delta_grid);
    bundle.leverage = leverage(est.ctx, est.beta);
    if (dopt.true_corr) {
      bundle.optimality = optimality_ratios(est.ctx, est.beta, *dopt.true_corr);
    }
    if (!dopt.d_grid.empty()) {
      if (!bundle.optimality) bundle.optimality.emplace();
      bundle.optimality->perturb_drift = perturbation_sensitivity(
          data, link, provider, options.method, dopt.true_corr, dopt.d_grid, dopt.seed);
    }
    res.diagnostics = std::move(bundle);
  }
  return res;
}

}  // namespace mtgee
