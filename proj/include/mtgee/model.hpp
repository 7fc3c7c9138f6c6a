#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mtgee {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LinkKind { identity, logistic, exponential };

std::string_view to_string(LinkKind kind);
LinkKind link_kind_from_string(std::string_view name);

// Value and first three derivatives of the mean function at theta.
struct LinkValues {
  double mu = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

// Mean function mu(theta) of the conditional model, with mu' serving as the
// variance function (dispersion fixed to one).
class Link {
 public:
  // |theta| bound for the exponential link.
  static constexpr double kExpSaturation = 700.0;

  constexpr explicit Link(LinkKind kind = LinkKind::identity) : kind_(kind) {}

  static constexpr Link identity() { return Link(LinkKind::identity); }
  static constexpr Link logistic() { return Link(LinkKind::logistic); }
  static constexpr Link exponential() { return Link(LinkKind::exponential); }

  constexpr LinkKind kind() const { return kind_; }

  // Throws DomainError for non-finite theta and SaturationError when the
  // exponential link is evaluated with |theta| > kExpSaturation.
  LinkValues eval(double theta) const;
  double mean(double theta) const { return eval(theta).mu; }

  friend constexpr bool operator==(Link a, Link b) { return a.kind_ == b.kind_; }

 private:
  LinkKind kind_;
};

inline LinkValues link_eval(Link link, double theta) { return link.eval(theta); }

// One time index: response y (length m), regressors X (m x p, row j is x_ij),
// and optionally the raw exogenous covariates kept for reporting.
struct TimeStep {
  Vector y;
  Matrix X;
  std::optional<Vector> z;
};

// Sequence of time steps with fixed cluster size m and parameter dimension p.
// X at step i must be built from information available before y at step i;
// the container cannot check that, only shapes and finiteness.
class ClusterSeries {
 public:
  ClusterSeries() = default;
  ClusterSeries(std::size_t m, std::size_t p, std::vector<TimeStep> steps);

  std::size_t m() const { return m_; }
  std::size_t p() const { return p_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  const TimeStep& operator[](std::size_t i) const { return steps_[i]; }
  const std::vector<TimeStep>& steps() const { return steps_; }

  auto begin() const { return steps_.begin(); }
  auto end() const { return steps_.end(); }

  // First n steps.
  ClusterSeries prefix(std::size_t n) const;

 private:
  std::size_t m_ = 0;
  std::size_t p_ = 0;
  std::vector<TimeStep> steps_;
};

struct ConditionalMoments {
  Vector mu;       // mu(x_ij' beta)
  Vector a_diag;   // mu'(x_ij' beta), the diagonal of A_i
  Vector eps_std;  // A_i^{-1/2} (y_i - mu_i)
};

// Throws ModelViolation naming the component when mu' <= 0.
ConditionalMoments conditional_moments(const TimeStep& step, const Vector& beta, Link link);

}  // namespace mtgee
