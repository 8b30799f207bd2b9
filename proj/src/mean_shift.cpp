// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/mean_shift.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "regionflow/solver.hpp"

namespace regionflow {

MeanShiftResult mean_shift(const Matrix& points, double bandwidth, int min_support) {
  MeanShiftResult res;
  res.bandwidth = bandwidth;
  const Eigen::Index n = points.rows();
  if (n == 0) return res;
  const double h2 = bandwidth * bandwidth;
  std::vector<Vector> converged;
  converged.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index s = 0; s < n; ++s) {
    Vector x = points.row(s).transpose();
    for (int it = 0; it < 500; ++it) {
      Vector sum = Vector::Zero(points.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((points.row(i).transpose() - x).squaredNorm() <= h2) {
          sum += points.row(i).transpose();
          ++count;
        }
      }
      if (count == 0) break;
      const Vector next = sum / count;
      const double shift = (next - x).norm();
      x = next;
      if (shift <= 1e-9 * std::max(bandwidth, 1e-12)) break;
    }
    converged.push_back(std::move(x));
  }

  std::vector<Vector> modes;
  std::vector<int> support;
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Vector& c = converged[static_cast<std::size_t>(s)];
    int hit = -1;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if ((modes[m] - c).norm() <= bandwidth / 2.0) {
        hit = static_cast<int>(m);
        break;
      }
    }
    if (hit < 0) {
      modes.push_back(c);
      support.push_back(0);
      hit = static_cast<int>(modes.size()) - 1;
    }
    ++support[static_cast<std::size_t>(hit)];
    labels[static_cast<std::size_t>(s)] = hit;
  }

  const int strongest = *std::max_element(support.begin(), support.end());
  const int keep_at = std::min(min_support, strongest);
  std::vector<int> remap(modes.size(), -1);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (support[m] >= keep_at) {
      remap[m] = static_cast<int>(res.modes.size());
      res.modes.push_back(modes[m]);
      res.support.push_back(support[m]);
    }
  }
  res.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    res.labels[i] = remap[static_cast<std::size_t>(labels[i])];
  }
  return res;
}

double default_bandwidth(const Matrix& points, int max_sample) {
  const Eigen::Index n = points.rows();
  if (n < 2) return 0.0;
  const Eigen::Index stride = std::max<Eigen::Index>(1, (n + max_sample - 1) / max_sample);
  double far = 0.0;
  for (Eigen::Index i = 0; i < n; i += stride) {
    for (Eigen::Index j = i + stride; j < n; j += stride) {
      far = std::max(far, (points.row(i) - points.row(j)).norm());
    }
  }
  return 0.5 * far;
}

Matrix principal_scores(const Matrix& points, int dims) {
  const Matrix centred = points.rowwise() - points.colwise().mean();
  Eigen::BDCSVD<Matrix> svd(centred, Eigen::ComputeThinV);
  const auto d = std::min<Eigen::Index>(dims, svd.matrixV().cols());
  return centred * svd.matrixV().leftCols(d);
}

int choose_k(const FeatureMatrix& x, std::optional<double> bandwidth, int k_max) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < x.data.cols(); ++c) {
    if (x.data.col(c).norm() > 0.0) keep.push_back(c);
  }
  if (keep.size() < 2) return 1;
  Matrix pts(static_cast<Eigen::Index>(keep.size()), x.data.rows());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = x.data.col(keep[i]).normalized().transpose();
  }
  const int dims = std::min<int>(k_max, static_cast<int>(keep.size()) - 1);
  const Matrix scores = principal_scores(pts, std::max(dims, 1));
  const double h = bandwidth ? *bandwidth : default_bandwidth(scores);
  // Points live on the unit sphere; a bandwidth at rounding level means one pattern.
  if (!(h > 1e-9)) return 1;
  const int n = static_cast<int>(keep.size());
  const int min_support = std::max(2, static_cast<int>(std::ceil(0.02 * n)));
  const auto res = mean_shift(scores, h, min_support);
  return std::clamp(static_cast<int>(res.modes.size()), 1, k_max);
}

}  // namespace regionflow
