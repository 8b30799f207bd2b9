// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/regions.hpp"

namespace regionflow {

/// Grid overlap between the regions of two consecutive frames. Only pairs
/// that share at least one grid are stored.
struct OverlapGraph {
  int t = 0;               // the later frame
  std::vector<int> left;   // region ids at t-1
  std::vector<int> right;  // region ids at t
  std::map<std::pair<int, int>, int> weights;

  int weight(int l, int r) const;
};

/// Region id -> persistent color label for one frame.
struct ColorAssignment {
  std::map<int, int> labels;
  int next_label = 0;  // first label never handed out so far
  std::vector<std::pair<int, int>> matched;  // (left, right) pairs that inherited
  std::int64_t matched_weight = 0;
};

struct EvolutionNode {
  int t = 0;
  int id = 0;
  int label = 0;
  int size = 0;
};

/// Strip from region `src` at t-1 to region `dst` at t.
struct EvolutionLink {
  int t = 0;
  int src = 0;
  int dst = 0;
  int width = 0;
};

struct EvolutionGraph {
  std::vector<std::vector<EvolutionNode>> nodes;  // per frame
  std::vector<EvolutionLink> links;
  std::vector<ColorAssignment> colors;            // per frame
};

/// Throws invalid_input when the frames cover different grid counts.
OverlapGraph overlap(const SegmentationFrame& prev, const SegmentationFrame& cur);

/// Maximum-weight one-to-one matching between left and right regions.
/// Matched right regions inherit the left label; the rest get fresh labels.
/// Among maximum-weight matchings the one preferring lower left ids, then
/// lower right ids, is chosen.
ColorAssignment match_colors(const OverlapGraph& g, const ColorAssignment& prev_colors);

/// Labels for the first frame: region id order, or, with per-grid district
/// labels (-1 for none), labels inherited from the best-overlapping district.
ColorAssignment seed_colors(const SegmentationFrame& first,
                            const std::optional<std::vector<int>>& district_of_grid = {});

/// Nodes with matched colors and one link per positive overlap.
EvolutionGraph build_evolution(const std::vector<SegmentationFrame>& frames,
                               const std::optional<std::vector<int>>& district_of_grid = {});

/// Copies the labels of `graph` into the regions of `frames`.
void apply_colors(std::vector<SegmentationFrame>& frames, const EvolutionGraph& graph);

/// Sankey document {nodes: [{t,id,label,size}], links: [{t,src,dst,width}]}.
/// Links narrower than `min_width` are left out of the document only.
nlohmann::json to_json(const EvolutionGraph& graph, int min_width = 1);
EvolutionGraph evolution_from_json(const nlohmann::json& j);

/// Per-grid district label from a GeoJSON FeatureCollection of polygons with
/// an integer "label" property (feature index when absent); -1 where no
/// polygon contains the cell centre.
std::vector<int> district_labels(const nlohmann::json& districts, const GridSpec& grid);

}  // namespace regionflow
