#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtgee/model.hpp"

namespace mtgee {

enum class CorrKind { independence, compound_symmetry, ar1, empirical_running, pseudo_fixed };

std::string_view to_string(CorrKind kind);
CorrKind corr_kind_from_string(std::string_view name);

// Admissible eigenvalue band [lower, upper] for every emitted matrix.
struct EigenBounds {
  double lower = 1e-10;
  double upper = 1e10;
};

// Identity, exchangeable or AR(1) pattern. Throws ContractError when alpha
// lies outside the positive-definite range for the given m.
Matrix build_fixed_corr(CorrKind kind, double alpha, std::size_t m);

// Clips eigenvalues of a symmetric matrix below at `floor`, reassembles and
// rescales to unit diagonal. Returns the input unchanged when no eigenvalue
// is clipped and the diagonal is already one.
Matrix spd_project(const Matrix& r, double floor = 1e-6);

// Throws CorrelationDegeneracy unless r is SPD with eigenvalues inside `bounds`.
void check_corr(const Matrix& r, const EigenBounds& bounds);

// Running sum of standardized-residual outer products.
class EmpiricalCorrState {
 public:
  explicit EmpiricalCorrState(std::size_t m = 0) : sum_outer_(Matrix::Zero(m, m)) {}

  void update(const Vector& eps_std);
  std::size_t count() const { return count_; }
  const Matrix& sum_outer() const { return sum_outer_; }
  // sum_outer / count; count must be positive.
  Matrix average() const;

 private:
  std::size_t count_ = 0;
  Matrix sum_outer_;
};

inline EmpiricalCorrState empirical_update(EmpiricalCorrState state, const Vector& eps_std) {
  state.update(eps_std);
  return state;
}

struct EmpiricalOptions {
  // Steps emitting the identity before the running average takes over.
  std::size_t warmup_steps = 2;
  // Eigenvalue floor handed to spd_project for near-singular averages.
  double floor = 1e-6;
  // Always rescale the average to a correlation matrix. When false, a
  // well-conditioned average is emitted on its own (covariance) scale.
  bool unit_diagonal = false;
  // Keep emitting the identity until the residual average can be full rank
  // (m residuals for a fixed plug-in, m + p when the plug-in is refitted).
  bool rank_gate = true;
};

// Turns a raw residual average into an admissible working matrix.
Matrix stabilize_empirical(const Matrix& average, const EmpiricalOptions& options);

// Rule producing the working correlation R_i used at time step i.
class CorrProvider {
 public:
  static CorrProvider independence();
  static CorrProvider compound_symmetry(double alpha);
  static CorrProvider ar1(double alpha);
  static CorrProvider empirical(EmpiricalOptions options = {});
  static CorrProvider pseudo_fixed(Matrix r);

  CorrKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const EmpiricalOptions& empirical_options() const { return empirical_; }
  const EigenBounds& bounds() const { return bounds_; }
  bool adaptive() const { return kind_ == CorrKind::empirical_running; }

  CorrProvider with_bounds(EigenBounds bounds) const;

  // Matrix for 1-based `step_index`. Adaptive providers read `state`, which
  // must have folded in exactly the steps before step_index.
  Matrix emit(std::size_t m, std::size_t step_index,
              const EmpiricalCorrState* state = nullptr) const;

  // One matrix per step of `data`. Adaptive providers fold residuals at
  // `plug_in_beta`, which is then required.
  std::vector<Matrix> sequence(const ClusterSeries& data, Link link,
                               const std::optional<Vector>& plug_in_beta = std::nullopt) const;

  std::string label() const;

 private:
  CorrProvider(CorrKind kind, double alpha) : kind_(kind), alpha_(alpha) {}

  CorrKind kind_;
  double alpha_ = 0.0;
  EmpiricalOptions empirical_{};
  Matrix fixed_;
  EigenBounds bounds_{};
};

}  // namespace mtgee
