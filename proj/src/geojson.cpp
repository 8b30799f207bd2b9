// Licensed under the Apache License 2.0 (see LICENSE file).

#include <algorithm>
#include <map>
#include <set>

#include "regionflow/regions.hpp"

namespace regionflow {
using json = nlohmann::json;

namespace {

using Point = std::pair<int, int>;

struct Edge {
  Point from;
  Point to;
};

int cross(Point a, Point b) { return a.first * b.second - a.second * b.first; }

long long twice_area(const std::vector<Point>& ring) {
  long long acc = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += static_cast<long long>(ring[i].first) * ring[i + 1].second -
           static_cast<long long>(ring[i + 1].first) * ring[i].second;
  }
  return acc;
}

// Even-odd test of point (px, py) against a closed ring.
bool inside(const std::vector<Point>& ring, double px, double py) {
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 2; i + 1 < ring.size(); j = i++) {
    const double xi = ring[i].first, yi = ring[i].second;
    const double xj = ring[j].first, yj = ring[j].second;
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

std::vector<Point> drop_collinear(const std::vector<Point>& ring) {
  // ring is closed; work on the open cycle.
  std::vector<Point> open(ring.begin(), ring.end() - 1);
  std::vector<Point> out;
  const std::size_t n = open.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point prev = open[(i + n - 1) % n];
    const Point cur = open[i];
    const Point next = open[(i + 1) % n];
    const Point d1{cur.first - prev.first, cur.second - prev.second};
    const Point d2{next.first - cur.first, next.second - cur.second};
    if (cross(d1, d2) != 0 || d1.first * d2.first + d1.second * d2.second < 0) out.push_back(cur);
  }
  if (out.empty()) out = open;
  out.push_back(out.front());
  return out;
}

}  // namespace

std::vector<std::vector<Point>> trace_cell_rings(const std::vector<Point>& cells) {
  const std::set<Point> in(cells.begin(), cells.end());
  auto has = [&](int x, int y) { return in.count({x, y}) > 0; };
  // Region on the left of every directed edge.
  std::multimap<Point, Point> out_edges;
  for (const auto& [x, y] : in) {
    if (!has(x, y - 1)) out_edges.emplace(Point{x, y}, Point{x + 1, y});
    if (!has(x + 1, y)) out_edges.emplace(Point{x + 1, y}, Point{x + 1, y + 1});
    if (!has(x, y + 1)) out_edges.emplace(Point{x + 1, y + 1}, Point{x, y + 1});
    if (!has(x - 1, y)) out_edges.emplace(Point{x, y + 1}, Point{x, y});
  }
  std::vector<std::vector<Point>> rings;
  while (!out_edges.empty()) {
    auto it = out_edges.begin();
    const Point start = it->first;
    std::vector<Point> ring{start};
    Point cur = it->second;
    Point dir{cur.first - start.first, cur.second - start.second};
    out_edges.erase(it);
    while (cur != start) {
      ring.push_back(cur);
      auto [lo, hi] = out_edges.equal_range(cur);
      auto pick = lo;
      if (std::next(lo) != hi) {
        // Corner pinch: take the left turn so the ring hugs the cell it
        // is walking around.
        for (auto e = lo; e != hi; ++e) {
          const Point d{e->second.first - cur.first, e->second.second - cur.second};
          if (cross(dir, d) > 0) pick = e;
        }
      }
      const Point next = pick->second;
      dir = {next.first - cur.first, next.second - cur.second};
      out_edges.erase(pick);
      cur = next;
    }
    ring.push_back(start);
    rings.push_back(drop_collinear(ring));
  }
  return rings;
}

json segmentation_geojson(const SegmentationFrame& seg, const GridSpec& grid) {
  auto coord = [&](const Point& p) {
    const LonLat ll = grid.corner(p.first, p.second);
    return json::array({ll.lon, ll.lat});
  };
  auto ring_json = [&](const std::vector<Point>& ring) {
    json r = json::array();
    for (const auto& p : ring) r.push_back(coord(p));
    return r;
  };

  json features = json::array();
  for (const auto& region : seg.regions) {
    std::vector<Point> cells;
    for (GridIndex g : region.grids) cells.push_back(grid.cell_of(g));
    const auto rings = trace_cell_rings(cells);
    std::vector<std::vector<Point>> outers;
    std::vector<std::vector<Point>> holes;
    for (const auto& r : rings) (twice_area(r) > 0 ? outers : holes).push_back(r);
    std::vector<json> polys(outers.size());
    for (std::size_t i = 0; i < outers.size(); ++i) polys[i] = json::array({ring_json(outers[i])});
    for (const auto& h : holes) {
      // The cell to the right of the hole's first edge lies inside the hole.
      const Point a = h[0], b = h[1];
      const int dx = (b.first > a.first) - (b.first < a.first);
      const int dy = (b.second > a.second) - (b.second < a.second);
      const double mx = a.first + 0.5 * dx + 0.5 * dy;
      const double my = a.second + 0.5 * dy - 0.5 * dx;
      std::size_t owner = 0;
      for (std::size_t i = 0; i < outers.size(); ++i) {
        if (inside(outers[i], mx, my)) {
          owner = i;
          break;
        }
      }
      if (!polys.empty()) polys[owner].push_back(ring_json(h));
    }
    json geometry;
    if (polys.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", polys[0]}};
    } else {
      geometry = {{"type", "MultiPolygon"}, {"coordinates", polys}};
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", geometry},
                        {"properties",
                         {{"id", region.id},
                          {"pattern", region.pattern},
                          {"color", region.color},
                          {"inflow", region.inflow},
                          {"outflow", region.outflow},
                          {"size", region.grids.size()},
                          {"grids", region.grids}}}});
  }
  return {{"type", "FeatureCollection"}, {"t", seg.t}, {"k", seg.k}, {"features", features}};
}

}  // namespace regionflow
