#include <doctest.h>

#include <Eigen/LU>

#include "helpers.hpp"
#include "mtgee/error.hpp"
#include "mtgee/linalg.hpp"

using namespace mtgee;

TEST_CASE("psd solves and inverses") {
  Philox4x32 rng(3);
  const Matrix a = test::random_matrix(rng, 6, 4);
  const Matrix h = a.transpose() * a;
  const Vector b = test::random_vector(rng, 4);
  const Vector x = linalg::solve_psd(h, b, "h");
  CHECK((h * x - b).norm() < 1e-10);
  CHECK((linalg::inverse_psd(h, "h") * h - Matrix::Identity(4, 4)).norm() < 1e-10);
  const Matrix s = linalg::inverse_sqrt_psd(h, "h");
  CHECK((s * h * s - Matrix::Identity(4, 4)).norm() < 1e-10);
  CHECK(linalg::log_det_psd(h, "h") == doctest::Approx(std::log(h.determinant())).epsilon(1e-10));
}

TEST_CASE("rank deficiency is reported with lambda_min") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 1.0;
  try {
    linalg::solve_psd(h, Vector::Ones(2), "h");
    FAIL("expected rank deficiency");
  } catch (const RankDeficiency& e) {
    CHECK(std::abs(e.lambda_min()) < 1e-12);
  }
  CHECK_THROWS_AS(linalg::log_det_psd(Matrix::Zero(3, 3), "z"), RankDeficiency);
}

TEST_CASE("spectral norm and eigen extremes") {
  Matrix a(2, 2);
  a << 2, 0, 0, -3;
  CHECK(linalg::spectral_norm_sym(a) == doctest::Approx(3.0));
  CHECK(linalg::lambda_min(a) == doctest::Approx(-3.0));
  CHECK(linalg::lambda_max(a) == doctest::Approx(2.0));
  CHECK_THROWS_AS(linalg::inverse_spd(a), CorrelationDegeneracy);
}
