// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/regions.hpp"

#include <algorithm>
#include <string>

#include "regionflow/error.hpp"

namespace regionflow {
using json = nlohmann::json;

SegmentationFrame segment(const Matrix& h, const FeatureMatrix& x, const GridSpec& grid,
                          const Overrides& overrides) {
  const int n = grid.size();
  if (h.rows() != n) fail(ErrorCode::invalid_input, "segment: H must have one row per grid");
  if (x.data.cols() != n) fail(ErrorCode::invalid_input, "segment: X does not match grid");
  const int k = static_cast<int>(h.cols());
  for (const auto& [g, p] : overrides) {
    if (g < 0 || g >= n) {
      fail(ErrorCode::invalid_input, "override grid " + std::to_string(g) + " out of range");
    }
    if (p < 0 || p >= k) {
      fail(ErrorCode::invalid_input, "override pattern " + std::to_string(p) + " out of range");
    }
  }

  SegmentationFrame seg;
  seg.t = x.t;
  seg.k = k;
  seg.overrides = overrides;
  seg.primary.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (const auto it = overrides.find(i); it != overrides.end()) {
      seg.primary[static_cast<std::size_t>(i)] = it->second;
      continue;
    }
    int best = 0;
    for (int j = 1; j < k; ++j) {
      if (h(i, j) > h(i, best)) best = j;
    }
    seg.primary[static_cast<std::size_t>(i)] = best;
  }

  seg.region_of.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> stack;
  for (int start = 0; start < n; ++start) {
    if (seg.region_of[static_cast<std::size_t>(start)] >= 0) continue;
    LatentRegion region;
    region.id = static_cast<int>(seg.regions.size());
    region.pattern = seg.primary[static_cast<std::size_t>(start)];
    seg.region_of[static_cast<std::size_t>(start)] = region.id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int g = stack.back();
      stack.pop_back();
      region.grids.push_back(g);
      const auto [ix, iy] = grid.cell_of(g);
      for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        const auto nb = grid.index_of(ix + dx, iy + dy);
        if (!nb) continue;
        const auto ni = static_cast<std::size_t>(*nb);
        if (seg.region_of[ni] < 0 && seg.primary[ni] == region.pattern) {
          seg.region_of[ni] = region.id;
          stack.push_back(*nb);
        }
      }
    }
    std::sort(region.grids.begin(), region.grids.end());
    for (int g : region.grids) {
      region.inflow += x.inflow(g);
      region.outflow += x.outflow(g);
    }
    seg.regions.push_back(std::move(region));
  }
  return seg;
}

RegionPatternCard region_pattern_card(const LatentRegion& region, const Matrix& w,
                                      const FeatureMatrix& x) {
  const auto n = x.data.cols();
  if (region.pattern < 0 || region.pattern >= w.cols() || w.rows() != 2 * n) {
    fail(ErrorCode::invalid_input, "pattern card: region pattern outside W");
  }
  RegionPatternCard card;
  card.region = region.id;
  card.pattern = region.pattern;
  card.feature = w.col(region.pattern);
  card.inout_delta = card.feature.tail(n) - card.feature.head(n);
  return card;
}

GridDetail grid_detail(GridIndex g, const FeatureMatrix& x) {
  if (g < 0 || g >= x.grids()) {
    fail(ErrorCode::invalid_input, "grid " + std::to_string(g) + " out of range");
  }
  GridDetail d;
  d.grid = g;
  d.feature = x.data.col(g);
  d.inflow = x.inflow(g);
  d.outflow = x.outflow(g);
  d.total = d.inflow + d.outflow;
  return d;
}

int isolated_region_count(const SegmentationFrame& seg) {
  return static_cast<int>(std::count_if(seg.regions.begin(), seg.regions.end(),
                                        [](const LatentRegion& r) { return r.grids.size() == 1; }));
}

namespace {

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

json to_json(const RegionPatternCard& card) {
  return {{"region", card.region},
          {"pattern", card.pattern},
          {"feature", to_vec(card.feature)},
          {"inout_delta", to_vec(card.inout_delta)}};
}

json to_json(const GridDetail& d) {
  return {{"grid", d.grid},       {"inflow", d.inflow}, {"outflow", d.outflow},
          {"total", d.total},     {"feature", to_vec(d.feature)}};
}

json index_json(const SegmentationFrame& seg) {
  json regions = json::array();
  for (const auto& r : seg.regions) {
    regions.push_back({{"id", r.id},
                       {"pattern", r.pattern},
                       {"color", r.color},
                       {"size", r.grids.size()},
                       {"inflow", r.inflow},
                       {"outflow", r.outflow},
                       {"grids", r.grids}});
  }
  json ov = json::object();
  for (const auto& [g, p] : seg.overrides) ov[std::to_string(g)] = p;
  return {{"t", seg.t},           {"k", seg.k},       {"primary", seg.primary},
          {"region_of", seg.region_of}, {"regions", regions}, {"overrides", ov}};
}

SegmentationFrame segmentation_from_index(const json& j) {
  SegmentationFrame seg;
  seg.t = j.at("t").get<int>();
  seg.k = j.at("k").get<int>();
  seg.primary = j.at("primary").get<std::vector<int>>();
  seg.region_of = j.at("region_of").get<std::vector<int>>();
  for (const auto& r : j.at("regions")) {
    LatentRegion region;
    region.id = r.at("id").get<int>();
    region.pattern = r.at("pattern").get<int>();
    region.color = r.at("color").get<int>();
    region.inflow = r.at("inflow").get<double>();
    region.outflow = r.at("outflow").get<double>();
    region.grids = r.at("grids").get<std::vector<int>>();
    seg.regions.push_back(std::move(region));
  }
  if (j.contains("overrides")) {
    for (const auto& [g, p] : j.at("overrides").items()) seg.overrides[std::stoi(g)] = p.get<int>();
  }
  return seg;
}

}  // namespace regionflow
