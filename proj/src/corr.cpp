#include "mtgee/corr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mtgee/error.hpp"
#include "mtgee/linalg.hpp"

namespace mtgee {

namespace {

bool is_symmetric(const Matrix& r) {
  if (r.rows() != r.cols()) return false;
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  return (r - r.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

std::string_view to_string(CorrKind kind) {
  switch (kind) {
    case CorrKind::independence:
      return "independence";
    case CorrKind::compound_symmetry:
      return "cs";
    case CorrKind::ar1:
      return "ar1";
    case CorrKind::empirical_running:
      return "empirical";
    case CorrKind::pseudo_fixed:
      return "fixed";
  }
  return "unknown";
}

CorrKind corr_kind_from_string(std::string_view name) {
  if (name == "independence" || name == "ind") return CorrKind::independence;
  if (name == "cs" || name == "compound_symmetry" || name == "exchangeable")
    return CorrKind::compound_symmetry;
  if (name == "ar1") return CorrKind::ar1;
  if (name == "empirical" || name == "empirical_running") return CorrKind::empirical_running;
  if (name == "fixed" || name == "pseudo_fixed") return CorrKind::pseudo_fixed;
  throw ContractError("unknown correlation kind '" + std::string(name) + "'");
}

Matrix build_fixed_corr(CorrKind kind, double alpha, std::size_t m) {
  if (m == 0) throw ContractError("cluster size must be positive");
  const auto n = static_cast<Eigen::Index>(m);
  switch (kind) {
    case CorrKind::independence:
      return Matrix::Identity(n, n);
    case CorrKind::compound_symmetry: {
      const double lower = m > 1 ? -1.0 / static_cast<double>(m - 1) : -1.0;
      if (!(alpha > lower && alpha < 1.0)) {
        std::ostringstream os;
        os << "compound symmetry alpha = " << alpha << " outside (" << lower << ", 1) for m = "
           << m;
        throw ContractError(os.str());
      }
      Matrix r = Matrix::Constant(n, n, alpha);
      r.diagonal().setOnes();
      return r;
    }
    case CorrKind::ar1: {
      if (!(alpha > -1.0 && alpha < 1.0)) {
        std::ostringstream os;
        os << "AR(1) alpha = " << alpha << " outside (-1, 1)";
        throw ContractError(os.str());
      }
      Matrix r(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
          r(j, k) = std::pow(alpha, static_cast<double>(std::abs(j - k)));
        }
      }
      return r;
    }
    default:
      throw ContractError("build_fixed_corr: not a fixed pattern");
  }
}

Matrix spd_project(const Matrix& r, double floor) {
  if (!is_symmetric(r)) {
    throw ContractError("spd_project requires a symmetric matrix");
  }
  if (!(floor > 0.0)) throw ContractError("spd_project floor must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(r);
  Vector lambda = es.eigenvalues();
  Matrix out = r;
  if (lambda.minCoeff() < floor) {
    lambda = lambda.cwiseMax(floor);
    out = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
    out = 0.5 * (out + out.transpose()).eval();
  }
  if ((out.diagonal().array() != 1.0).any()) {
    const Vector inv_sd = out.diagonal().cwiseSqrt().cwiseInverse();
    out = inv_sd.asDiagonal() * out * inv_sd.asDiagonal();
    out = 0.5 * (out + out.transpose()).eval();
    out.diagonal().setOnes();
  }
  return out;
}

void check_corr(const Matrix& r, const EigenBounds& bounds) {
  if (!is_symmetric(r)) {
    throw CorrelationDegeneracy("working correlation is not symmetric", 0.0);
  }
  const Vector lambda = Eigen::SelfAdjointEigenSolver<Matrix>(r, Eigen::EigenvaluesOnly).eigenvalues();
  const double lo = lambda.minCoeff();
  const double hi = lambda.maxCoeff();
  if (!(lo >= bounds.lower)) {
    std::ostringstream os;
    os << "working correlation eigenvalue " << lo << " below bound " << bounds.lower;
    throw CorrelationDegeneracy(os.str(), lo);
  }
  if (!(hi <= bounds.upper)) {
    std::ostringstream os;
    os << "working correlation eigenvalue " << hi << " above bound " << bounds.upper;
    throw CorrelationDegeneracy(os.str(), hi);
  }
}

void EmpiricalCorrState::update(const Vector& eps_std) {
  if (eps_std.size() != sum_outer_.rows()) {
    throw ContractError("empirical_update: residual length does not match cluster size");
  }
  sum_outer_.noalias() += eps_std * eps_std.transpose();
  ++count_;
}

Matrix EmpiricalCorrState::average() const {
  if (count_ == 0) throw ContractError("empirical average of zero steps");
  return sum_outer_ / static_cast<double>(count_);
}

Matrix stabilize_empirical(const Matrix& average, const EmpiricalOptions& options) {
  Matrix sym = 0.5 * (average + average.transpose());
  if (options.unit_diagonal) return spd_project(sym, options.floor);
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  const double scale = sym.diagonal().maxCoeff();
  if (scale > 0.0 && lmin >= options.floor * scale) return sym;
  if (scale <= 0.0) return Matrix::Identity(sym.rows(), sym.cols());
  // Clip on the covariance scale so projected steps stay comparable with
  // the unprojected ones.
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector clipped = es.eigenvalues().cwiseMax(options.floor * scale);
  return linalg::symmetrize(es.eigenvectors() * clipped.asDiagonal() *
                            es.eigenvectors().transpose());
}

CorrProvider CorrProvider::independence() { return {CorrKind::independence, 0.0}; }

CorrProvider CorrProvider::compound_symmetry(double alpha) {
  build_fixed_corr(CorrKind::compound_symmetry, alpha, 2);
  return {CorrKind::compound_symmetry, alpha};
}

CorrProvider CorrProvider::ar1(double alpha) {
  build_fixed_corr(CorrKind::ar1, alpha, 2);
  return {CorrKind::ar1, alpha};
}

CorrProvider CorrProvider::empirical(EmpiricalOptions options) {
  CorrProvider p{CorrKind::empirical_running, 0.0};
  p.empirical_ = options;
  return p;
}

CorrProvider CorrProvider::pseudo_fixed(Matrix r) {
  if (r.rows() == 0 || r.rows() != r.cols()) {
    throw ContractError("pseudo_fixed matrix must be square and non-empty");
  }
  CorrProvider p{CorrKind::pseudo_fixed, 0.0};
  p.fixed_ = std::move(r);
  return p;
}

CorrProvider CorrProvider::with_bounds(EigenBounds bounds) const {
  CorrProvider p = *this;
  p.bounds_ = bounds;
  return p;
}

Matrix CorrProvider::emit(std::size_t m, std::size_t step_index,
                          const EmpiricalCorrState* state) const {
  if (step_index == 0) throw ContractError("step index is 1-based");
  Matrix r;
  switch (kind_) {
    case CorrKind::independence:
    case CorrKind::compound_symmetry:
    case CorrKind::ar1:
      r = build_fixed_corr(kind_, alpha_, m);
      break;
    case CorrKind::pseudo_fixed:
      if (static_cast<std::size_t>(fixed_.rows()) != m) {
        throw ContractError("pseudo_fixed matrix size does not match cluster size");
      }
      r = fixed_;
      break;
    case CorrKind::empirical_running: {
      if (state == nullptr) throw ContractError("empirical provider needs its running state");
      if (state->count() != step_index - 1) {
        throw ContractError("empirical state must hold exactly the steps before step_index");
      }
      const std::size_t gate = empirical_.rank_gate ? m : 0;
      if (state->count() < std::max(empirical_.warmup_steps, gate) || state->count() == 0) {
        r = Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      } else {
        r = stabilize_empirical(state->average(), empirical_);
      }
      break;
    }
  }
  check_corr(r, bounds_);
  return r;
}

std::vector<Matrix> CorrProvider::sequence(const ClusterSeries& data, Link link,
                                           const std::optional<Vector>& plug_in_beta) const {
  std::vector<Matrix> out;
  out.reserve(data.size());
  if (!adaptive()) {
    if (data.empty()) return out;
    const Matrix r = emit(data.m(), 1);
    out.assign(data.size(), r);
    return out;
  }
  if (!plug_in_beta) throw ContractError("empirical provider requires a plug-in beta");
  EmpiricalCorrState state(data.m());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back(emit(data.m(), i + 1, &state));
    state.update(conditional_moments(data[i], *plug_in_beta, link).eps_std);
  }
  return out;
}

std::string CorrProvider::label() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == CorrKind::compound_symmetry || kind_ == CorrKind::ar1) os << "(" << alpha_ << ")";
  return os.str();
}

}  // namespace mtgee
