// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/overview.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "regionflow/error.hpp"

namespace regionflow {

std::string to_string(Daypart d) {
  switch (d) {
    case Daypart::dawn: return "dawn";
    case Daypart::morning: return "morning";
    case Daypart::afternoon: return "afternoon";
    case Daypart::night: return "night";
  }
  return "dawn";
}

void DaypartBounds::validate() const {
  if (!(0 <= hours[0] && hours[0] < hours[1] && hours[1] < hours[2] && hours[2] <= 24)) {
    fail(ErrorCode::invalid_input, "daypart boundaries must increase within [0, 24]");
  }
}

Daypart daypart(int t, const TimeBinning& binning, const DaypartBounds& bounds) {
  constexpr std::int64_t kDay = 86400;
  const std::int64_t local = binning.bin_start(t) + std::int64_t{bounds.utc_offset_minutes} * 60;
  const std::int64_t hour = ((local % kDay + kDay) % kDay) / 3600;
  if (hour < bounds.hours[0]) return Daypart::dawn;
  if (hour < bounds.hours[1]) return Daypart::morning;
  if (hour < bounds.hours[2]) return Daypart::afternoon;
  return Daypart::night;
}

Vector vectorize_frame(const FeatureMatrix& x) {
  return Eigen::Map<const Vector>(x.data.data(), x.data.size());
}

PcaEmbedding pca_embed(const std::vector<Vector>& vectors) {
  if (vectors.size() < 2) fail(ErrorCode::invalid_input, "PCA needs at least two vectors");
  const Eigen::Index n = static_cast<Eigen::Index>(vectors.size());
  const Eigen::Index d = vectors.front().size();
  Matrix data(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vectors[static_cast<std::size_t>(i)].size() != d) {
      fail(ErrorCode::invalid_input, "PCA vectors differ in length");
    }
    data.row(i) = vectors[static_cast<std::size_t>(i)].transpose();
  }
  data.rowwise() -= data.colwise().mean();

  // Eigenvectors of the n x n Gram matrix give the scores directly; loadings
  // are recovered only to fix the sign.
  const Matrix gram = data * data.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  PcaEmbedding out;
  out.coords.assign(vectors.size(), {0.0, 0.0});
  out.total_variance = gram.trace() / static_cast<double>(n - 1);
  const double floor = 1e-12 * std::max(1.0, gram.trace());
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::Index col = n - 1 - axis;
    if (col < 0) break;
    const double lambda = eig.eigenvalues()(col);
    if (lambda <= floor) break;
    Vector u = eig.eigenvectors().col(col);
    const Vector loading = data.transpose() * u;
    Eigen::Index arg = 0;
    loading.cwiseAbs().maxCoeff(&arg);
    if (loading(arg) < 0) u = -u;
    const Vector scores = u * std::sqrt(lambda);
    for (Eigen::Index i = 0; i < n; ++i) out.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] = scores(i);
    out.explained_variance[static_cast<std::size_t>(axis)] = lambda / static_cast<double>(n - 1);
  }
  return out;
}

Overview overview_points(const std::vector<FeatureMatrix>& series, const TimeBinning& binning,
                         const DaypartBounds& bounds) {
  Overview out;
  if (series.empty()) return out;
  if (series.size() == 1) {
    out.pca.coords.assign(1, {0.0, 0.0});
  } else {
    std::vector<Vector> vecs;
    for (const auto& x : series) vecs.push_back(vectorize_frame(x));
    out.pca = pca_embed(vecs);
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.points.push_back({series[i].t, out.pca.coords[i][0], out.pca.coords[i][1],
                          series[i].total_trips(), daypart(series[i].t, binning, bounds)});
  }
  return out;
}

BarycentricLayout barycentric_layout(const Matrix& h) {
  const Eigen::Index k = h.cols();
  if (k < 2) fail(ErrorCode::invalid_input, "barycentric layout needs K >= 2");
  BarycentricLayout out;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k);
    out.anchors.push_back({std::cos(a), std::sin(a)});
  }
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double s = h.row(i).sum();
    std::array<double, 2> p{0.0, 0.0};
    if (s > 0.0) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double c = h(i, j) / s;
        p[0] += c * out.anchors[static_cast<std::size_t>(j)][0];
        p[1] += c * out.anchors[static_cast<std::size_t>(j)][1];
      }
    }
    out.points.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const OverviewPoint& p) {
  return {{"t", p.t}, {"x", p.x}, {"y", p.y}, {"size", p.size}, {"daypart", to_string(p.daypart)}};
}

nlohmann::json to_json(const Overview& overview) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : overview.points) pts.push_back(to_json(p));
  const auto& pca = overview.pca;
  return {{"points", pts},
          {"explained_variance", {pca.explained_variance[0], pca.explained_variance[1]}},
          {"total_variance", pca.total_variance}};
}

nlohmann::json to_json(const BarycentricLayout& layout, const SegmentationFrame* seg) {
  nlohmann::json anchors = nlohmann::json::array();
  for (const auto& a : layout.anchors) anchors.push_back({a[0], a[1]});
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : layout.points) points.push_back({p[0], p[1]});
  nlohmann::json j = {{"k", layout.anchors.size()}, {"anchors", anchors}, {"points", points}};
  if (seg) {
    nlohmann::json centroids = nlohmann::json::array();
    for (const auto& r : seg->regions) {
      double x = 0.0, y = 0.0;
      for (GridIndex g : r.grids) {
        x += layout.points.at(static_cast<std::size_t>(g))[0];
        y += layout.points.at(static_cast<std::size_t>(g))[1];
      }
      const double n = r.grids.empty() ? 1.0 : static_cast<double>(r.grids.size());
      centroids.push_back({{"region", r.id}, {"x", x / n}, {"y", y / n}});
    }
    j["regions"] = centroids;
  }
  return j;
}

}  // namespace regionflow
