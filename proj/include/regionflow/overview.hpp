// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/grid.hpp"
#include "regionflow/ingest.hpp"
#include "regionflow/regions.hpp"

namespace regionflow {

enum class Daypart { dawn, morning, afternoon, night };

std::string to_string(Daypart d);

/// Hour boundaries between dawn|morning, morning|afternoon, afternoon|night.
struct DaypartBounds {
  std::array<int, 3> hours{6, 12, 18};
  int utc_offset_minutes = 0;  // local time = UTC + offset

  void validate() const;
};

/// Daypart of the local start hour of bin t.
Daypart daypart(int t, const TimeBinning& binning, const DaypartBounds& bounds = {});

/// Column-major flattening: grid 0's 2N features, then grid 1's, and so on.
Vector vectorize_frame(const FeatureMatrix& x);

struct PcaEmbedding {
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained_variance{0.0, 0.0};  // variance along each axis
  double total_variance = 0.0;
};

/// Mean-centered PCA onto the top two axes. Each axis is signed so that its
/// largest-magnitude loading is positive. Throws invalid_input for fewer
/// than two vectors or unequal lengths.
PcaEmbedding pca_embed(const std::vector<Vector>& vectors);

struct OverviewPoint {
  int t = 0;
  double x = 0.0;
  double y = 0.0;
  double size = 0.0;
  Daypart daypart = Daypart::dawn;
};

struct Overview {
  std::vector<OverviewPoint> points;
  PcaEmbedding pca;
};

/// One point per frame from the PCA of the raw frame vectors. A single
/// frame sits at the origin.
Overview overview_points(const std::vector<FeatureMatrix>& series, const TimeBinning& binning,
                         const DaypartBounds& bounds = {});

struct BarycentricLayout {
  std::vector<std::array<double, 2>> anchors;  // angle 2*pi*j/K on the unit circle
  std::vector<std::array<double, 2>> points;   // per grid
};

/// Grid positions from row-normalized H; zero rows sit at the centre.
/// Throws invalid_input when K < 2.
BarycentricLayout barycentric_layout(const Matrix& h);

nlohmann::json to_json(const OverviewPoint& p);
nlohmann::json to_json(const Overview& overview);
/// With a segmentation, adds per-region centroids of the member grid points.
nlohmann::json to_json(const BarycentricLayout& layout, const SegmentationFrame* seg = nullptr);

}  // namespace regionflow
