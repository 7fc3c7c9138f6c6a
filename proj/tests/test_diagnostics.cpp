#include <doctest.h>

#include "helpers.hpp"
#include "mtgee/corr.hpp"
#include "mtgee/diagnostics.hpp"
#include "mtgee/error.hpp"
#include "mtgee/estfun.hpp"
#include "mtgee/simgen.hpp"

using namespace mtgee;

namespace {

Estimate fit_ar2(const SimDesign& d, std::uint64_t stream, const CorrProvider& p) {
  return estimate(generate_ar2(d, stream), Link::identity(), p, FitMethod::linear);
}

}  // namespace

TEST_CASE("checkpoints") {
  CHECK(checkpoints(25) == std::vector<std::size_t>{3, 6, 9, 12, 15, 18, 21, 24, 25});
  CHECK(checkpoints(100).size() == 10);
  CHECK(checkpoints(100).back() == 100);
  CHECK(checkpoints(1) == std::vector<std::size_t>{1});
}

TEST_CASE("stationary AR(2) supports growth") {
  SimDesign d;
  d.n = 2000;
  const Estimate e = fit_ar2(d, 1, CorrProvider::independence());
  const ConditionReport r = eigen_conditions(e.ctx, e.beta, {0.1, 0.25, 0.5});
  CHECK(r.growth_verdict == Verdict::supported);
  REQUIRE(r.checkpoints.size() == 10);
  for (std::size_t k = 0; k < r.checkpoints.size(); ++k) {
    CHECK(r.lambda_min_traj[k] <= r.lambda_max_traj[k]);
    if (k > 0) {
      CHECK(r.lambda_min_traj[k] >= r.lambda_min_traj[k - 1]);
      CHECK(r.lambda_max_traj[k] >= r.lambda_max_traj[k - 1]);
    }
  }
  // Roughly linear growth.
  CHECK(r.lambda_min_traj.back() / r.lambda_min_traj.front() > 5.0);
  REQUIRE(r.s_delta.size() == 3);
  for (const SDeltaSeries& s : r.s_delta) CHECK(s.verdict == Verdict::supported);
}

TEST_CASE("zero regressors violate growth") {
  std::vector<TimeStep> steps(100, test::make_step(Matrix::Zero(2, 2), Vector::Ones(2)));
  const EstimatingContext ctx(ClusterSeries(2, 2, steps), Link::identity(),
                              std::vector<Matrix>(100, Matrix::Identity(2, 2)));
  const ConditionReport r = eigen_conditions(ctx, Vector::Zero(2), {0.25});
  for (double l : r.lambda_min_traj) CHECK(l == 0.0);
  CHECK(r.growth_verdict == Verdict::violated);
  CHECK(r.s_delta[0].verdict == Verdict::violated);
}

TEST_CASE("i.i.d. scalar covariates keep the delta = 1/2 ratio bounded") {
  Philox4x32 rng(4);
  std::vector<Vector> x;
  std::vector<double> y;
  for (int i = 0; i < 3000; ++i) {
    x.push_back(Vector::Constant(1, rng.normal()));
    y.push_back(rng.normal());
  }
  const EstimatingContext ctx =
      EstimatingContext::make(test::scalar_series(x, y), Link::identity(), CorrProvider::independence());
  const ConditionReport r = eigen_conditions(ctx, Vector::Zero(1), {0.5});
  // p = 1: lambda_min = lambda_max, ratio = 1 everywhere.
  for (double v : r.s_delta[0].ratio) CHECK(v == doctest::Approx(1.0));
  CHECK(r.s_delta[0].verdict == Verdict::supported);
}

TEST_CASE("short series are inconclusive and delta is range-checked") {
  SimDesign d;
  d.n = 15;
  const Estimate e = fit_ar2(d, 1, CorrProvider::independence());
  const ConditionReport r = eigen_conditions(e.ctx, e.beta, {0.2});
  CHECK(r.growth_verdict == Verdict::inconclusive);
  CHECK(r.s_delta[0].verdict == Verdict::inconclusive);
  CHECK_THROWS_AS(eigen_conditions(e.ctx, e.beta, {0.0}), ContractError);
  CHECK_THROWS_AS(eigen_conditions(e.ctx, e.beta, {0.6}), ContractError);
}

TEST_CASE("ergodicity check") {
  SimDesign d;
  d.n = 2000;
  std::vector<ClusterSeries> reps;
  for (std::uint64_t r = 0; r < 100; ++r) reps.push_back(generate_ar2(d, r));
  const ErgodicityReport er = ergodicity_check(reps, d.beta0, Link::identity(), CorrProvider::independence());
  REQUIRE(er.median.size() == er.checkpoints.size());
  CHECK(er.median.back() < er.median.front());
  CHECK(er.deviation.front().size() == 100);

  std::vector<ClusterSeries> same(60, reps[0]);
  const ErgodicityReport z = ergodicity_check(same, d.beta0, Link::identity(), CorrProvider::ar1(0.7));
  for (const auto& row : z.deviation)
    for (double v : row) CHECK(v < 1e-10);

  CHECK_THROWS_AS(ergodicity_check({reps[0]}, d.beta0, Link::identity(), CorrProvider::independence()),
                  ContractError);
}

TEST_CASE("determinant ratios") {
  SimDesign d;
  d.n = 300;
  const Matrix rbar = truth_corr(d);
  const Estimate oracle = fit_ar2(d, 2, CorrProvider::pseudo_fixed(rbar));
  const OptimalityReport o = optimality_ratios(oracle.ctx, oracle.beta, rbar);
  for (std::size_t k = 0; k < o.checkpoints.size(); ++k) {
    CHECK(std::abs(o.det_ratio_H[k] - 1.0) < 1e-10);
    CHECK(std::abs(o.det_ratio_M[k] - 1.0) < 1e-10);
  }
  const Estimate ind = fit_ar2(d, 2, CorrProvider::independence());
  const OptimalityReport oi = optimality_ratios(ind.ctx, ind.beta, rbar);
  CHECK(std::abs(oi.det_ratio_M.back() - 1.0) > 0.5);
  for (double v : oi.det_ratio_H) CHECK(v > 0.0);
}

TEST_CASE("empirical working matrices approach optimality") {
  std::vector<double> small, large;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (std::size_t n : {200, 2000}) {
      SimDesign d;
      d.n = n;
      const Estimate e = fit_ar2(d, s, CorrProvider::empirical());
      const OptimalityReport o = optimality_ratios(e.ctx, e.beta, truth_corr(d));
      (n == 200 ? small : large).push_back(std::abs(o.det_ratio_M.back() - 1.0));
    }
  }
  CHECK(test::median(large) < test::median(small));
}

TEST_CASE("leverage") {
  const EstimatingContext one = EstimatingContext::make(
      test::scalar_series({Vector::Ones(1)}, {0.0}), Link::identity(), CorrProvider::independence());
  const LeverageStats l = leverage(one, Vector::Zero(1));
  CHECK(l.gamma_prime == 1.0);
  CHECK(l.a_prime == 1.0);

  // n steps with X = I_3: H' = n I and every row has leverage 1/n.
  std::vector<TimeStep> steps(12, test::make_step(Matrix::Identity(3, 3), Vector::Zero(3)));
  const EstimatingContext basis = EstimatingContext::make(ClusterSeries(3, 3, steps), Link::identity(),
                                                          CorrProvider::independence());
  const LeverageStats b = leverage(basis, Vector::Zero(3));
  CHECK(b.gamma_prime == doctest::Approx(1.0 / 12).epsilon(1e-14));
  CHECK(b.a_prime == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> g250, g2000;
  for (std::uint64_t s = 0; s < 10; ++s) {
    for (std::size_t n : {250, 2000}) {
      SimDesign d;
      d.n = n;
      const Estimate e = fit_ar2(d, s, CorrProvider::independence());
      (n == 250 ? g250 : g2000).push_back(leverage(e.ctx, e.beta).gamma_prime);
    }
  }
  CHECK(test::median(g2000) < test::median(g250));
}

TEST_CASE("perturbation sensitivity") {
  SimDesign d;
  d.n = 300;
  const ClusterSeries data = generate_ar2(d, 1);
  const std::vector<double> grid{0.0, 0.1, 1.0, 10.0};
  const auto pts = perturbation_sensitivity(data, Link::identity(), CorrProvider::compound_symmetry(0.7),
                                            FitMethod::linear, truth_corr(d), grid, 3);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].budget == 0.0);
  CHECK(pts[0].beta_drift == 0.0);
  REQUIRE(pts[0].det_ratio_drift.has_value());
  CHECK(*pts[0].det_ratio_drift == 0.0);

  std::vector<std::vector<double>> drift(3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = perturbation_sensitivity(data, Link::identity(), CorrProvider::independence(),
                                            FitMethod::linear, std::nullopt, grid, s);
    for (int k = 0; k < 3; ++k) drift[k].push_back(r[k + 1].beta_drift);
    CHECK_FALSE(r[1].det_ratio_drift.has_value());
  }
  CHECK(test::median(drift[0]) <= test::median(drift[1]));
  CHECK(test::median(drift[1]) <= test::median(drift[2]));

  CHECK_THROWS_AS(perturbation_sensitivity(data, Link::identity(), CorrProvider::independence(),
                                           FitMethod::linear, std::nullopt, {0.1}, 1),
                  ContractError);
}

TEST_CASE("verdict names") {
  CHECK(to_string(Verdict::supported) == "supported");
  CHECK(to_string(Verdict::violated) == "violated");
  CHECK(to_string(Verdict::inconclusive) == "inconclusive");
}
