#include "mtgee/linalg.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mtgee/error.hpp"

namespace mtgee::linalg {

namespace {

Vector eigenvalues(const Matrix& sym) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
}

[[noreturn]] void throw_rank(std::string_view what, double lmin, double lmax) {
  std::ostringstream os;
  os << what << " is singular: lambda_min = " << lmin << ", lambda_max = " << lmax;
  throw RankDeficiency(os.str(), lmin);
}

void check_rank(const Vector& lambda, std::string_view what) {
  const double lmin = lambda.minCoeff();
  const double lmax = lambda.maxCoeff();
  if (!(lmax > 0.0) || !(lmin > kRankTolerance * lmax)) throw_rank(what, lmin, lmax);
}

}  // namespace

double lambda_min(const Matrix& sym) { return eigenvalues(sym).minCoeff(); }
double lambda_max(const Matrix& sym) { return eigenvalues(sym).maxCoeff(); }

Vector solve_psd(const Matrix& h, const Vector& b, std::string_view what) {
  const Matrix sym = symmetrize(h);
  check_rank(eigenvalues(sym), what);
  return sym.ldlt().solve(b);
}

Matrix inverse_psd(const Matrix& h, std::string_view what) {
  const Matrix sym = symmetrize(h);
  check_rank(eigenvalues(sym), what);
  return symmetrize(sym.ldlt().solve(Matrix::Identity(sym.rows(), sym.cols())));
}

Matrix inverse_spd(const Matrix& r) {
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) {
    throw CorrelationDegeneracy("working correlation is not positive definite",
                                lambda_min(symmetrize(r)));
  }
  return symmetrize(llt.solve(Matrix::Identity(r.rows(), r.cols())));
}

Matrix inverse_sqrt_psd(const Matrix& h, std::string_view what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(h));
  check_rank(es.eigenvalues(), what);
  const Vector d = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return symmetrize(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose());
}

double log_det_psd(const Matrix& h, std::string_view what) {
  const Vector lambda = eigenvalues(symmetrize(h));
  check_rank(lambda, what);
  return lambda.array().log().sum();
}

double spectral_norm_sym(const Matrix& sym) { return eigenvalues(symmetrize(sym)).cwiseAbs().maxCoeff(); }

}  // namespace mtgee::linalg
