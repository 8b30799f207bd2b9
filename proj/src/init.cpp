// Licensed under the Apache License 2.0 (see LICENSE file).

#include <cmath>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "regionflow/error.hpp"
#include "regionflow/solver.hpp"

namespace regionflow {

FactorizationFrame init_frame(const FeatureMatrix& x, int k, std::uint64_t seed) {
  const auto rows = x.data.rows();
  const auto n = x.data.cols();
  if (k < 1 || k > std::min(rows, n)) {
    fail(ErrorCode::invalid_input, "init_frame: K=" + std::to_string(k) +
                                       " outside [1, " + std::to_string(std::min(rows, n)) + "]");
  }
  FactorizationFrame f;
  f.t = x.t;
  f.k = k;
  f.W = Matrix::Zero(rows, k);
  f.H = Matrix::Zero(n, k);

  Eigen::BDCSVD<Matrix> svd(x.data, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  for (int j = 0; j < k; ++j) {
    const double sigma = sv[j];
    if (!(sigma > 0.0)) continue;
    const Vector u = svd.matrixU().col(j);
    const Vector v = svd.matrixV().col(j);
    const Vector up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
    const Vector vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
    const double mp = up.norm() * vp.norm();
    const double mn = un.norm() * vn.norm();
    // The leading pair of a nonnegative matrix is single-signed; for the
    // others keep whichever sign carries more of the rank-one term.
    const bool positive = mp >= mn;
    const Vector& a = positive ? up : un;
    const Vector& b = positive ? vp : vn;
    const double mass = positive ? mp : mn;
    if (!(mass > 0.0)) continue;
    const double scale = std::sqrt(sigma * mass);
    f.W.col(j) = a / a.norm();
    f.H.col(j) = scale * scale * b / b.norm();
  }

  // Unit columns for W; the scale lives in H. Zeros are filled with seeded
  // noise on the order of a uniform entry so every coordinate can move.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double fill = 1.0;
  const double h_mean = x.data.size() > 0 ? x.data.mean() : 0.0;
  const double w_floor = fill / std::sqrt(static_cast<double>(rows));
  const double h_floor = fill * (h_mean > 0.0 ? h_mean : 1.0);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (f.W(r, j) == 0.0) f.W(r, j) = w_floor * unit(rng);
    }
    const double norm = f.W.col(j).norm();
    f.W.col(j) /= norm;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (f.H(i, j) == 0.0) f.H(i, j) = h_floor * unit(rng);
    }
  }
  return f;
}

}  // namespace regionflow
