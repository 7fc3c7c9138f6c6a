#pragma once

#include <string_view>

#include "mtgee/model.hpp"

// Small dense helpers shared by the estimation and diagnostics code.
namespace mtgee::linalg {

// Relative threshold below which a symmetric PSD matrix counts as singular.
inline constexpr double kRankTolerance = 1e-12;

double lambda_min(const Matrix& sym);
double lambda_max(const Matrix& sym);

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Solves H x = b for symmetric PSD H; throws RankDeficiency (carrying
// lambda_min) when H is numerically singular. `what` names H in the message.
Vector solve_psd(const Matrix& h, const Vector& b, std::string_view what);
Matrix inverse_psd(const Matrix& h, std::string_view what);

// Inverse of an SPD matrix through its Cholesky factor; throws
// CorrelationDegeneracy if the factorization fails.
Matrix inverse_spd(const Matrix& r);

// H^{-1/2} for SPD H via the eigendecomposition.
Matrix inverse_sqrt_psd(const Matrix& h, std::string_view what);

// log det of an SPD matrix; throws RankDeficiency when not positive definite.
double log_det_psd(const Matrix& h, std::string_view what);

// Largest absolute eigenvalue of a symmetric matrix.
double spectral_norm_sym(const Matrix& sym);

}  // namespace mtgee::linalg
