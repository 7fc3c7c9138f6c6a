#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtgee/model.hpp"
#include "mtgee/rng.hpp"

namespace mtgee::test {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

inline double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

// Max elementwise |a - b| / max(1, |b|).
inline double rel_err(const Matrix& a, const Matrix& b) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      e = std::max(e, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(b(i, j))));
  return e;
}

inline Matrix random_matrix(Philox4x32& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix a(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) a(i, j) = scale * rng.normal();
  return a;
}

inline Vector random_vector(Philox4x32& rng, Eigen::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

// Scalar series y_i = x_i' beta + e_i, m = 1.
inline ClusterSeries scalar_series(const std::vector<Vector>& x, const std::vector<double>& y) {
  std::vector<TimeStep> steps;
  for (std::size_t i = 0; i < x.size(); ++i) {
    TimeStep s;
    s.X = x[i].transpose();
    s.y = Vector::Constant(1, y[i]);
    steps.push_back(std::move(s));
  }
  return ClusterSeries(1, static_cast<std::size_t>(x.front().size()), std::move(steps));
}

inline TimeStep make_step(const Matrix& x, const Vector& y) {
  TimeStep s;
  s.X = x;
  s.y = y;
  return s;
}

}  // namespace mtgee::test
