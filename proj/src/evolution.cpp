// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/evolution.hpp"

#include <algorithm>
#include <set>

#include "regionflow/assignment.hpp"
#include "regionflow/error.hpp"

namespace regionflow {

int OverlapGraph::weight(int l, int r) const {
  auto it = weights.find({l, r});
  return it == weights.end() ? 0 : it->second;
}

OverlapGraph overlap(const SegmentationFrame& prev, const SegmentationFrame& cur) {
  if (prev.region_of.size() != cur.region_of.size()) {
    fail(ErrorCode::invalid_input, "segmentation frames cover different grids");
  }
  OverlapGraph g;
  g.t = cur.t;
  for (const auto& r : prev.regions) g.left.push_back(r.id);
  for (const auto& r : cur.regions) g.right.push_back(r.id);
  for (std::size_t i = 0; i < cur.region_of.size(); ++i) {
    ++g.weights[{prev.region_of[i], cur.region_of[i]}];
  }
  return g;
}

namespace {

std::int64_t matching_value(const std::vector<std::vector<std::int64_t>>& w,
                            const std::vector<int>& match) {
  std::int64_t total = 0;
  for (std::size_t l = 0; l < match.size(); ++l) {
    if (match[l] >= 0) total += w[l][static_cast<std::size_t>(match[l])];
  }
  return total;
}

// Best total over the rows and columns still free.
std::int64_t best_value(const std::vector<std::vector<int>>& w, const std::vector<bool>& row_free,
                        const std::vector<bool>& col_free) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t l = 0; l < row_free.size(); ++l)
    if (row_free[l]) rows.push_back(l);
  for (std::size_t r = 0; r < col_free.size(); ++r)
    if (col_free[r]) cols.push_back(r);
  if (rows.empty() || cols.empty()) return 0;
  std::vector<std::vector<std::int64_t>> sub(rows.size(), std::vector<std::int64_t>(cols.size(), 0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) sub[i][j] = std::max(0, w[rows[i]][cols[j]]);
  return matching_value(sub, max_weight_assignment(sub));
}

// Maximum-weight matching over positive entries. Among optimal matchings,
// rows are fixed in ascending order, each to the lowest column that still
// admits an optimal completion; a row stays unmatched only if no positive
// column does.
std::vector<int> lexicographic_matching(const std::vector<std::vector<int>>& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w.front().size() : 0;
  std::vector<bool> row_free(rows, true), col_free(cols, true);
  std::int64_t remaining = best_value(w, row_free, col_free);
  std::vector<int> match(rows, -1);
  for (std::size_t l = 0; l < rows && remaining > 0; ++l) {
    row_free[l] = false;
    for (std::size_t r = 0; r < cols; ++r) {
      if (!col_free[r] || w[l][r] <= 0) continue;
      col_free[r] = false;
      if (w[l][r] + best_value(w, row_free, col_free) == remaining) {
        match[l] = static_cast<int>(r);
        remaining -= w[l][r];
        break;
      }
      col_free[r] = true;
    }
  }
  return match;
}

}  // namespace

ColorAssignment match_colors(const OverlapGraph& g, const ColorAssignment& prev_colors) {
  std::vector<std::vector<int>> w(g.left.size(), std::vector<int>(g.right.size(), 0));
  for (std::size_t l = 0; l < g.left.size(); ++l) {
    for (std::size_t r = 0; r < g.right.size(); ++r) w[l][r] = g.weight(g.left[l], g.right[r]);
  }
  ColorAssignment out;
  out.next_label = prev_colors.next_label;
  std::vector<int> match;
  if (!g.left.empty() && !g.right.empty()) match = lexicographic_matching(w);
  std::vector<bool> taken(g.right.size(), false);
  for (std::size_t l = 0; l < match.size(); ++l) {
    const int r = match[l];
    if (r < 0 || w[l][static_cast<std::size_t>(r)] <= 0) continue;
    auto it = prev_colors.labels.find(g.left[l]);
    if (it == prev_colors.labels.end()) {
      fail(ErrorCode::invalid_input, "previous colors miss region " + std::to_string(g.left[l]));
    }
    out.labels[g.right[static_cast<std::size_t>(r)]] = it->second;
    out.matched.emplace_back(g.left[l], g.right[static_cast<std::size_t>(r)]);
    out.matched_weight += w[l][static_cast<std::size_t>(r)];
    taken[static_cast<std::size_t>(r)] = true;
  }
  for (std::size_t r = 0; r < g.right.size(); ++r) {
    if (!taken[r]) out.labels[g.right[r]] = out.next_label++;
  }
  std::sort(out.matched.begin(), out.matched.end());
  return out;
}

ColorAssignment seed_colors(const SegmentationFrame& first,
                            const std::optional<std::vector<int>>& district_of_grid) {
  ColorAssignment out;
  if (!district_of_grid) {
    for (const auto& r : first.regions) out.labels[r.id] = out.next_label++;
    return out;
  }
  const auto& district = *district_of_grid;
  if (district.size() != first.region_of.size()) {
    fail(ErrorCode::invalid_input, "district map does not match the grid count");
  }
  std::set<int> ids;
  for (int d : district) {
    if (d >= 0) ids.insert(d);
  }
  const std::vector<int> districts(ids.begin(), ids.end());
  std::vector<std::vector<int>> w(first.regions.size(), std::vector<int>(districts.size(), 0));
  for (std::size_t i = 0; i < district.size(); ++i) {
    if (district[i] < 0) continue;
    const auto col = std::lower_bound(districts.begin(), districts.end(), district[i]) - districts.begin();
    ++w[static_cast<std::size_t>(first.region_of[i])][static_cast<std::size_t>(col)];
  }
  out.next_label = districts.empty() ? 0 : districts.back() + 1;
  std::vector<int> match;
  if (!w.empty() && !districts.empty()) match = lexicographic_matching(w);
  for (std::size_t r = 0; r < first.regions.size(); ++r) {
    const int c = r < match.size() ? match[r] : -1;
    if (c >= 0 && w[r][static_cast<std::size_t>(c)] > 0) {
      out.labels[first.regions[r].id] = districts[static_cast<std::size_t>(c)];
    } else {
      out.labels[first.regions[r].id] = out.next_label++;
    }
  }
  return out;
}

namespace {

std::vector<EvolutionNode> frame_nodes(const SegmentationFrame& f, const ColorAssignment& c) {
  std::vector<EvolutionNode> nodes;
  for (const auto& r : f.regions) {
    nodes.push_back({f.t, r.id, c.labels.at(r.id), static_cast<int>(r.grids.size())});
  }
  return nodes;
}

}  // namespace

EvolutionGraph build_evolution(const std::vector<SegmentationFrame>& frames,
                               const std::optional<std::vector<int>>& district_of_grid) {
  if (frames.empty()) fail(ErrorCode::invalid_input, "no frames to track");
  EvolutionGraph g;
  g.colors.push_back(seed_colors(frames.front(), district_of_grid));
  g.nodes.push_back(frame_nodes(frames.front(), g.colors.back()));
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const OverlapGraph o = overlap(frames[t - 1], frames[t]);
    for (const auto& [lr, w] : o.weights) g.links.push_back({frames[t].t, lr.first, lr.second, w});
    g.colors.push_back(match_colors(o, g.colors.back()));
    g.nodes.push_back(frame_nodes(frames[t], g.colors.back()));
  }
  return g;
}

void apply_colors(std::vector<SegmentationFrame>& frames, const EvolutionGraph& graph) {
  if (frames.size() != graph.colors.size()) {
    fail(ErrorCode::invalid_input, "evolution graph does not match the frame count");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (auto& r : frames[t].regions) r.color = graph.colors[t].labels.at(r.id);
  }
}

nlohmann::json to_json(const EvolutionGraph& graph, int min_width) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& frame : graph.nodes) {
    for (const auto& n : frame) {
      nodes.push_back({{"t", n.t}, {"id", n.id}, {"label", n.label}, {"size", n.size}});
    }
  }
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : graph.links) {
    if (l.width < min_width) continue;
    links.push_back({{"t", l.t}, {"src", l.src}, {"dst", l.dst}, {"width", l.width}});
  }
  return {{"nodes", nodes}, {"links", links}};
}

EvolutionGraph evolution_from_json(const nlohmann::json& j) {
  EvolutionGraph g;
  int current_t = 0;
  for (const auto& n : j.at("nodes")) {
    EvolutionNode node{n.at("t").get<int>(), n.at("id").get<int>(), n.at("label").get<int>(),
                       n.at("size").get<int>()};
    if (g.nodes.empty() || node.t != current_t) {
      g.nodes.emplace_back();
      g.colors.emplace_back();
      current_t = node.t;
    }
    g.nodes.back().push_back(node);
    g.colors.back().labels[node.id] = node.label;
  }
  int next = 0;
  for (auto& c : g.colors) {
    for (const auto& [id, label] : c.labels) next = std::max(next, label + 1);
    c.next_label = next;
  }
  for (const auto& l : j.at("links")) {
    g.links.push_back({l.at("t").get<int>(), l.at("src").get<int>(), l.at("dst").get<int>(),
                       l.at("width").get<int>()});
  }
  return g;
}

namespace {

using Ring = std::vector<std::pair<double, double>>;

Ring parse_ring(const nlohmann::json& j) {
  Ring ring;
  for (const auto& p : j) ring.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return ring;
}

bool in_ring(const Ring& ring, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const auto [xi, yi] = ring[i];
    const auto [xj, yj] = ring[j];
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

// Polygon coordinates: outer ring followed by holes.
bool in_polygon(const nlohmann::json& coords, double x, double y) {
  if (coords.empty() || !in_ring(parse_ring(coords[0]), x, y)) return false;
  for (std::size_t h = 1; h < coords.size(); ++h) {
    if (in_ring(parse_ring(coords[h]), x, y)) return false;
  }
  return true;
}

}  // namespace

std::vector<int> district_labels(const nlohmann::json& districts, const GridSpec& grid) {
  if (districts.value("type", "") != "FeatureCollection" || !districts.contains("features")) {
    fail(ErrorCode::invalid_input, "district map must be a GeoJSON FeatureCollection");
  }
  std::vector<int> out(static_cast<std::size_t>(grid.size()), -1);
  const auto& features = districts.at("features");
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& feat = features[f];
    int label = static_cast<int>(f);
    if (feat.contains("properties") && feat["properties"].is_object() &&
        feat["properties"].contains("label")) {
      label = feat["properties"]["label"].get<int>();
    }
    const auto& geom = feat.at("geometry");
    const std::string type = geom.at("type").get<std::string>();
    for (GridIndex g = 0; g < grid.size(); ++g) {
      if (out[static_cast<std::size_t>(g)] >= 0) continue;
      const LonLat c = grid.cell_center(g);
      const double x = c.lon, y = c.lat;
      bool hit = false;
      if (type == "Polygon") {
        hit = in_polygon(geom.at("coordinates"), x, y);
      } else if (type == "MultiPolygon") {
        for (const auto& poly : geom.at("coordinates")) hit = hit || in_polygon(poly, x, y);
      } else {
        fail(ErrorCode::invalid_input, "unsupported district geometry: " + type);
      }
      if (hit) out[static_cast<std::size_t>(g)] = label;
    }
  }
  return out;
}

}  // namespace regionflow
