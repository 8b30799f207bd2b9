// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/ingest.hpp"

namespace regionflow {

/// Analyst pins: grid -> pattern.
using Overrides = std::map<GridIndex, int>;

struct LatentRegion {
  int id = 0;       // frame-local, ordered by smallest member grid
  int pattern = 0;  // column of W / H
  std::vector<GridIndex> grids;  // ascending
  double inflow = 0.0;
  double outflow = 0.0;
  int color = -1;   // persistent label, filled in by the evolution stage
};

struct SegmentationFrame {
  int t = 0;
  int k = 0;
  std::vector<int> primary;           // per grid
  std::vector<int> region_of;         // per grid
  std::vector<LatentRegion> regions;
  Overrides overrides;
};

struct RegionPatternCard {
  int region = 0;
  int pattern = 0;
  Vector feature;      // W[:, pattern], length 2N
  Vector inout_delta;  // feature[N + p] - feature[p]; > 0 means net arriving
};

struct GridDetail {
  GridIndex grid = 0;
  Vector feature;  // column of X, length 2N
  double inflow = 0.0;
  double outflow = 0.0;
  double total = 0.0;
};

/// argmax of each H row (lowest index on ties, overrides win), then
/// 4-connected components of equal labels. Region stats come from X.
/// Throws invalid_input for an override outside [0, K) or an unknown grid.
SegmentationFrame segment(const Matrix& h, const FeatureMatrix& x, const GridSpec& grid,
                          const Overrides& overrides = {});

RegionPatternCard region_pattern_card(const LatentRegion& region, const Matrix& w,
                                      const FeatureMatrix& x);

GridDetail grid_detail(GridIndex g, const FeatureMatrix& x);

/// Count of regions made of a single grid.
int isolated_region_count(const SegmentationFrame& seg);

nlohmann::json to_json(const RegionPatternCard& card);
nlohmann::json to_json(const GridDetail& detail);
/// Grid-to-region index document: {t, k, primary, region_of, regions}.
nlohmann::json index_json(const SegmentationFrame& seg);
SegmentationFrame segmentation_from_index(const nlohmann::json& j);

/// FeatureCollection with one feature per region. Geometry is the outline
/// of the region's cells (Polygon, or MultiPolygon if cells only touch at
/// corners); properties: id, pattern, color, inflow, outflow, grids.
nlohmann::json segmentation_geojson(const SegmentationFrame& seg, const GridSpec& grid);

/// Outline rings of a set of lattice cells, in lattice corner coordinates.
/// Outer rings are counter-clockwise, holes clockwise; each ring is closed
/// (first point repeated).
std::vector<std::vector<std::pair<int, int>>> trace_cell_rings(
    const std::vector<std::pair<int, int>>& cells);

}  // namespace regionflow
