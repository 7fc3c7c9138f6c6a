#include "mtgee/model.hpp"

#include <cmath>
#include <sstream>

#include "mtgee/error.hpp"

namespace mtgee {

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::identity:
      return "identity";
    case LinkKind::logistic:
      return "logistic";
    case LinkKind::exponential:
      return "exponential";
  }
  return "unknown";
}

LinkKind link_kind_from_string(std::string_view name) {
  if (name == "identity") return LinkKind::identity;
  if (name == "logistic" || name == "logit") return LinkKind::logistic;
  if (name == "exponential" || name == "log") return LinkKind::exponential;
  throw ContractError("unknown link '" + std::string(name) + "'");
}

LinkValues Link::eval(double theta) const {
  if (!std::isfinite(theta)) {
    throw DomainError("link evaluated at non-finite theta");
  }
  switch (kind_) {
    case LinkKind::identity:
      return {theta, 1.0, 0.0, 0.0};
    case LinkKind::logistic: {
      // Evaluate on the side where exp() cannot overflow; q = 1 - mu.
      const double e = std::exp(-std::abs(theta));
      const double mu = theta >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      const double q = theta >= 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
      const double d1 = mu * q;
      const double d2 = d1 * (q - mu);
      const double d3 = d1 * (1.0 - 6.0 * mu * q);
      return {mu, d1, d2, d3};
    }
    case LinkKind::exponential: {
      if (std::abs(theta) > kExpSaturation) {
        std::ostringstream os;
        os << "exponential link saturated at theta = " << theta << " (|theta| > "
           << kExpSaturation << ")";
        throw SaturationError(os.str(), theta);
      }
      const double e = std::exp(theta);
      return {e, e, e, e};
    }
  }
  throw ContractError("invalid link kind");
}

ClusterSeries::ClusterSeries(std::size_t m, std::size_t p, std::vector<TimeStep> steps)
    : m_(m), p_(p), steps_(std::move(steps)) {
  if (m_ == 0 || p_ == 0) {
    throw ContractError("cluster size m and parameter dimension p must be positive");
  }
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (static_cast<std::size_t>(s.y.size()) != m_ ||
        static_cast<std::size_t>(s.X.rows()) != m_ ||
        static_cast<std::size_t>(s.X.cols()) != p_) {
      std::ostringstream os;
      os << "step " << i + 1 << ": expected y of length " << m_ << " and X of shape " << m_
         << "x" << p_ << ", got y " << s.y.size() << " and X " << s.X.rows() << "x"
         << s.X.cols();
      throw ContractError(os.str());
    }
    if (!s.y.allFinite() || !s.X.allFinite()) {
      throw ContractError("step " + std::to_string(i + 1) + " contains non-finite values");
    }
  }
}

ClusterSeries ClusterSeries::prefix(std::size_t n) const {
  if (n > steps_.size()) {
    throw ContractError("prefix longer than series");
  }
  return ClusterSeries(m_, p_, std::vector<TimeStep>(steps_.begin(), steps_.begin() + n));
}

ConditionalMoments conditional_moments(const TimeStep& step, const Vector& beta, Link link) {
  if (step.X.cols() != beta.size()) {
    throw ContractError("beta length does not match regressor columns");
  }
  const Eigen::Index m = step.y.size();
  ConditionalMoments cm{Vector(m), Vector(m), Vector(m)};
  const Vector theta = step.X * beta;
  for (Eigen::Index j = 0; j < m; ++j) {
    const LinkValues v = link.eval(theta[j]);
    if (!(v.d1 > 0.0)) {
      std::ostringstream os;
      os << "mu'(theta) = " << v.d1 << " is not positive at component " << j
         << " (theta = " << theta[j] << ")";
      throw ModelViolation(os.str(), static_cast<std::size_t>(j), theta[j]);
    }
    cm.mu[j] = v.mu;
    cm.a_diag[j] = v.d1;
    cm.eps_std[j] = (step.y[j] - v.mu) / std::sqrt(v.d1);
  }
  return cm;
}

}  // namespace mtgee
