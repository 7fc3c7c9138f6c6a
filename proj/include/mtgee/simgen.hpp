#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>

#include "mtgee/estfun.hpp"
#include "mtgee/rng.hpp"

namespace mtgee {

// Correlation pattern used to generate the errors.
enum class TruthPattern { independence, cs, ar1 };

std::string_view to_string(TruthPattern t);
TruthPattern truth_from_string(std::string_view name);

// Multivariate AR(2) design y_i = b1 y_{i-1} + b2 y_{i-2} + e_i,
// e_i ~ N_m(0, Rbar), regressors X_i = [y_{i-1} | y_{i-2}].
struct SimDesign {
  std::size_t n = 500;
  std::size_t m = 5;
  Vector beta0 = (Vector(2) << 0.5, 0.2).finished();
  TruthPattern truth = TruthPattern::cs;
  double alpha0 = 0.7;
  // Initial conditions; empty means zero.
  Vector y0;
  Vector y1;
  std::uint64_t seed = 1;
};

// The error correlation Rbar of a design.
Matrix truth_corr(const SimDesign& design);

// Draws L z with L the lower Cholesky factor of cov. Throws ContractError
// (naming the SPD requirement) when cov is not symmetric positive definite.
class MvnSampler {
 public:
  explicit MvnSampler(const Matrix& cov);
  Vector operator()(Philox4x32& rng) const;

 private:
  Matrix lower_;
};

inline Vector mvn_sample(const Matrix& cov, Philox4x32& rng) { return MvnSampler(cov)(rng); }

// Absolute bound on ||y_i|| before a run counts as explosive.
inline constexpr double kExplosionBound = 1e6;

// Deterministic in (design.seed, stream). The series has design.n steps;
// the two initial conditions are not steps. Throws InstabilityError once
// ||y_i|| exceeds kExplosionBound.
ClusterSeries generate_ar2(const SimDesign& design, std::uint64_t stream = 0);

// Binary panel with a logistic link: x_ij = (1, y_{i-1,j}), components
// conditionally independent given the past. y_0 = 0.
ClusterSeries generate_binary_ar(std::size_t n, std::size_t m, const Vector& beta0,
                                 std::uint64_t seed, std::uint64_t stream = 0);

// One estimator in a Monte Carlo study. `oracle` estimators use the
// design's true correlation as a fixed working matrix.
struct EstimatorSpec {
  std::string label;
  CorrProvider provider = CorrProvider::independence();
  FitMethod method = FitMethod::linear;
  bool oracle = false;
};

// The five estimators compared in the AR(2) study: working independence,
// exchangeable(alpha), AR(1)(alpha), two-step, and the oracle ("true").
std::vector<EstimatorSpec> standard_estimators(double alpha = 0.7);

struct CellStats {
  std::string estimator;
  TruthPattern truth = TruthPattern::independence;
  Vector bias;
  Vector rb;
  Vector mse;
  Vector re;
  Vector coverage;
  std::size_t replications = 0;
};

struct MonteCarloReport {
  std::vector<SimDesign> designs;
  std::vector<std::string> estimators;
  std::size_t s = 0;
  double level = 0.95;
  std::size_t failures = 0;
  // One cell per (design, estimator), designs outer.
  std::vector<CellStats> cells;

  const CellStats& cell(std::string_view estimator, TruthPattern truth) const;
};

// Fraction of failed replications tolerated before the study aborts.
inline constexpr double kMaxFailureRate = 0.05;

// Replication r of design d draws from stream (d << 32) ^ r of design.seed,
// so serial and parallel runs agree. A replication where any estimator
// fails is dropped for all of them. RE divides by the MSE of the oracle
// estimator; when none is listed RE is left empty.
MonteCarloReport monte_carlo_study(const std::vector<SimDesign>& designs,
                                   const std::vector<EstimatorSpec>& estimators, std::size_t s,
                                   double level, bool parallel = true);

// Per-component coverage of the `level` sandwich intervals over s replications.
Vector coverage_study(const SimDesign& design, const EstimatorSpec& estimator, std::size_t s,
                      double level, bool parallel = true);

}  // namespace mtgee
