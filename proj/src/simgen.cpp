#include "mtgee/simgen.hpp"

#include <cmath>
#include <sstream>

#include "mtgee/error.hpp"
#include "mtgee/inference.hpp"
#include "mtgee/parallel.hpp"

namespace mtgee {

std::string_view to_string(TruthPattern t) {
  switch (t) {
    case TruthPattern::independence:
      return "R1";
    case TruthPattern::cs:
      return "R2";
    case TruthPattern::ar1:
      return "R3";
  }
  return "unknown";
}

TruthPattern truth_from_string(std::string_view name) {
  if (name == "R1" || name == "independence" || name == "ind") return TruthPattern::independence;
  if (name == "R2" || name == "cs" || name == "exchangeable") return TruthPattern::cs;
  if (name == "R3" || name == "ar1") return TruthPattern::ar1;
  throw ContractError("unknown truth pattern '" + std::string(name) + "'");
}

Matrix truth_corr(const SimDesign& design) {
  switch (design.truth) {
    case TruthPattern::independence:
      return build_fixed_corr(CorrKind::independence, 0.0, design.m);
    case TruthPattern::cs:
      return build_fixed_corr(CorrKind::compound_symmetry, design.alpha0, design.m);
    case TruthPattern::ar1:
      return build_fixed_corr(CorrKind::ar1, design.alpha0, design.m);
  }
  throw ContractError("invalid truth pattern");
}

MvnSampler::MvnSampler(const Matrix& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols() || !cov.isApprox(cov.transpose())) {
    throw ContractError("mvn_sample: covariance must be square and symmetric (SPD required)");
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ContractError("mvn_sample: covariance is not SPD (Cholesky failed)");
  }
  lower_ = llt.matrixL();
}

Vector MvnSampler::operator()(Philox4x32& rng) const {
  Vector z(lower_.rows());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
  return lower_.triangularView<Eigen::Lower>() * z;
}

ClusterSeries generate_ar2(const SimDesign& design, std::uint64_t stream) {
  if (design.beta0.size() != 2) throw ContractError("AR(2) design needs a 2-vector beta0");
  if (design.m == 0) throw ContractError("cluster size must be positive");
  const auto m = static_cast<Eigen::Index>(design.m);
  const MvnSampler sampler(truth_corr(design));
  Philox4x32 rng(design.seed, stream);
  Vector prev2 = design.y0.size() ? design.y0 : Vector::Zero(m);
  Vector prev1 = design.y1.size() ? design.y1 : Vector::Zero(m);
  if (prev1.size() != m || prev2.size() != m) {
    throw ContractError("initial conditions must have length m");
  }
  std::vector<TimeStep> steps;
  steps.reserve(design.n);
  for (std::size_t i = 0; i < design.n; ++i) {
    TimeStep step;
    step.X.resize(m, 2);
    step.X.col(0) = prev1;
    step.X.col(1) = prev2;
    step.y = step.X * design.beta0 + sampler(rng);
    if (!(step.y.norm() <= kExplosionBound)) {
      std::ostringstream os;
      os << "AR(2) series exploded at step " << i + 1 << " (||y|| = " << step.y.norm()
         << "); beta0 = (" << design.beta0[0] << ", " << design.beta0[1]
         << ") is outside the stationary region";
      throw InstabilityError(os.str());
    }
    prev2 = std::move(prev1);
    prev1 = step.y;
    steps.push_back(std::move(step));
  }
  return ClusterSeries(design.m, 2, std::move(steps));
}

ClusterSeries generate_binary_ar(std::size_t n, std::size_t m, const Vector& beta0,
                                 std::uint64_t seed, std::uint64_t stream) {
  if (beta0.size() != 2) throw ContractError("binary AR design needs a 2-vector beta0");
  const auto mm = static_cast<Eigen::Index>(m);
  const Link link = Link::logistic();
  Philox4x32 rng(seed, stream);
  Vector prev = Vector::Zero(mm);
  std::vector<TimeStep> steps;
  steps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TimeStep step;
    step.X.resize(mm, 2);
    step.X.col(0).setOnes();
    step.X.col(1) = prev;
    step.y.resize(mm);
    const Vector theta = step.X * beta0;
    for (Eigen::Index j = 0; j < mm; ++j) {
      step.y[j] = rng.uniform() < link.mean(theta[j]) ? 1.0 : 0.0;
    }
    prev = step.y;
    steps.push_back(std::move(step));
  }
  return ClusterSeries(m, 2, std::move(steps));
}

std::vector<EstimatorSpec> standard_estimators(double alpha) {
  return {
      {"independence", CorrProvider::independence(), FitMethod::linear, false},
      {"cs", CorrProvider::compound_symmetry(alpha), FitMethod::linear, false},
      {"ar1", CorrProvider::ar1(alpha), FitMethod::linear, false},
      {"two_step", CorrProvider::independence(), FitMethod::two_step, false},
      {"true", CorrProvider::independence(), FitMethod::linear, true},
  };
}

const CellStats& MonteCarloReport::cell(std::string_view estimator, TruthPattern truth) const {
  for (const auto& c : cells) {
    if (c.estimator == estimator && c.truth == truth) return c;
  }
  throw ContractError("no Monte Carlo cell for estimator '" + std::string(estimator) + "'");
}

namespace {

struct RepOutcome {
  bool ok = false;
  std::string error;
  std::vector<Vector> beta;           // per estimator
  std::vector<Eigen::ArrayXd> cover;  // per estimator, 1 when the interval covers beta0_k
};

RepOutcome run_replication(const SimDesign& design, std::uint64_t stream,
                           const std::vector<EstimatorSpec>& estimators, double level) {
  RepOutcome out;
  try {
    const ClusterSeries data = generate_ar2(design, stream);
    const Matrix rbar = truth_corr(design);
    for (const auto& spec : estimators) {
      const CorrProvider provider = spec.oracle ? CorrProvider::pseudo_fixed(rbar) : spec.provider;
      const Estimate est = estimate(data, Link::identity(), provider, spec.method);
      const SandwichEstimate sw = sandwich(est.ctx, est.beta);
      const auto ci = component_intervals(sw, est.beta, level);
      Eigen::ArrayXd cov(est.beta.size());
      for (Eigen::Index k = 0; k < est.beta.size(); ++k) {
        const double b = design.beta0[k];
        cov[k] = (ci[static_cast<std::size_t>(k)].lo <= b && b <= ci[static_cast<std::size_t>(k)].hi)
                     ? 1.0
                     : 0.0;
      }
      out.beta.push_back(est.beta);
      out.cover.push_back(std::move(cov));
    }
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

std::uint64_t stream_id(std::size_t design_index, std::size_t rep) {
  return (static_cast<std::uint64_t>(design_index) << 32) ^ static_cast<std::uint64_t>(rep);
}

}  // namespace

MonteCarloReport monte_carlo_study(const std::vector<SimDesign>& designs,
                                   const std::vector<EstimatorSpec>& estimators, std::size_t s,
                                   double level, bool parallel) {
  if (s < 2) throw ContractError("Monte Carlo study needs s >= 2 replications");
  if (estimators.empty()) throw ContractError("Monte Carlo study needs at least one estimator");
  if (!(level > 0.0 && level < 1.0)) throw ContractError("level must lie in (0, 1)");

  MonteCarloReport rep;
  rep.designs = designs;
  rep.s = s;
  rep.level = level;
  for (const auto& e : estimators) rep.estimators.push_back(e.label);
  std::ptrdiff_t oracle = -1;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    if (estimators[e].oracle) oracle = static_cast<std::ptrdiff_t>(e);
  }

  for (std::size_t d = 0; d < designs.size(); ++d) {
    const SimDesign& design = designs[d];
    std::vector<RepOutcome> outcomes(s);
    parallel_for(
        s, [&](std::size_t r) { outcomes[r] = run_replication(design, stream_id(d, r), estimators, level); },
        parallel ? thread_count() : 1);

    std::size_t failed = 0;
    std::string first_error;
    for (const auto& o : outcomes) {
      if (!o.ok) {
        if (failed == 0) first_error = o.error;
        ++failed;
      }
    }
    rep.failures += failed;
    if (static_cast<double>(failed) > kMaxFailureRate * static_cast<double>(s)) {
      std::ostringstream os;
      os << failed << " of " << s << " replications failed for truth " << to_string(design.truth)
         << " (first error: " << first_error << ")";
      throw SolverFailure(os.str());
    }
    const std::size_t used = s - failed;
    const auto p = design.beta0.size();

    std::vector<CellStats> cells(estimators.size());
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      Vector sum = Vector::Zero(p), sq = Vector::Zero(p), cov = Vector::Zero(p);
      for (const auto& o : outcomes) {
        if (!o.ok) continue;
        const Vector err = o.beta[e] - design.beta0;
        sum += err;
        sq += err.cwiseProduct(err);
        cov += o.cover[e].matrix();
      }
      CellStats& c = cells[e];
      c.estimator = estimators[e].label;
      c.truth = design.truth;
      c.replications = used;
      c.bias = sum / static_cast<double>(used);
      c.mse = sq / static_cast<double>(used);
      c.coverage = cov / static_cast<double>(used);
      c.rb.resize(p);
      for (Eigen::Index k = 0; k < p; ++k) {
        c.rb[k] = std::abs(design.beta0[k]) < 1e-8 ? c.bias[k] : c.bias[k] / design.beta0[k];
      }
    }
    for (auto& c : cells) {
      if (oracle >= 0) {
        c.re = c.mse.cwiseQuotient(cells[static_cast<std::size_t>(oracle)].mse);
      }
      rep.cells.push_back(std::move(c));
    }
  }
  return rep;
}

Vector coverage_study(const SimDesign& design, const EstimatorSpec& estimator, std::size_t s,
                      double level, bool parallel) {
  if (s == 0) throw ContractError("coverage study needs s > 0 replications");
  if (s < 2) throw ContractError("coverage study needs s >= 2 replications");
  const MonteCarloReport rep = monte_carlo_study({design}, {estimator}, s, level, parallel);
  return rep.cells.front().coverage;
}

}  // namespace mtgee
