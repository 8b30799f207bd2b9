// Licensed under the Apache License 2.0 (see LICENSE file).

#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "regionflow/error.hpp"
#include "regionflow/regions.hpp"
#include "testkit.hpp"

using namespace regionflow;

namespace {

long long twice_area(const std::vector<std::pair<int, int>>& ring) {
  long long acc = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += static_cast<long long>(ring[i].first) * ring[i + 1].second -
           static_cast<long long>(ring[i + 1].first) * ring[i].second;
  }
  return acc;
}

FeatureMatrix counting_matrix(int n) {
  Matrix m(2 * n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < 2 * n; ++i) m(i, j) = static_cast<double>((i * 7 + j * 3) % 5);
  return {2, m};
}

}  // namespace

TEST_CASE("segment a two-stripe membership") {
  const GridSpec g(0.0, 0.0, 1.0, 1.0, 4, 2);
  Matrix h(8, 2);
  for (int i = 0; i < 8; ++i) {
    const auto [ix, iy] = g.cell_of(i);
    h(i, 0) = ix < 2 ? 0.9 : 0.1;
    h(i, 1) = 1.0 - h(i, 0);
  }
  const FeatureMatrix x = counting_matrix(8);
  const SegmentationFrame seg = segment(h, x, g);
  CHECK(seg.t == 2);
  CHECK(seg.k == 2);
  REQUIRE(seg.regions.size() == 2);
  CHECK(seg.regions[0].grids == std::vector<GridIndex>{0, 1, 4, 5});
  CHECK(seg.regions[0].pattern == 0);
  CHECK(seg.regions[1].grids == std::vector<GridIndex>{2, 3, 6, 7});
  CHECK(seg.regions[1].pattern == 1);
  CHECK(isolated_region_count(seg) == 0);

  SUBCASE("overrides move cells between regions") {
    // Column 1 pinned to pattern 1 joins the right stripe.
    const SegmentationFrame o = segment(h, x, g, Overrides{{1, 1}, {5, 1}});
    CHECK(o.primary[1] == 1);
    REQUIRE(o.regions.size() == 2);
    const SegmentationFrame p = segment(h, x, g, Overrides{{0, 1}, {4, 1}});
    // Column 0 pinned to pattern 1 is cut off from the right stripe by column 1.
    CHECK(p.regions.size() == 3);
    CHECK(p.overrides.size() == 2);
  }
  SUBCASE("bad overrides") {
    CHECK_THROWS_AS(segment(h, x, g, Overrides{{0, 2}}), Error);
    CHECK_THROWS_AS(segment(h, x, g, Overrides{{8, 0}}), Error);
    CHECK_THROWS_AS(segment(h, x, g, Overrides{{-1, 0}}), Error);
  }
}

TEST_CASE("ties go to the lowest pattern") {
  const GridSpec g(0.0, 0.0, 1.0, 1.0, 3, 1);
  const Matrix h = Matrix::Constant(3, 3, 0.5);
  const SegmentationFrame seg = segment(h, counting_matrix(3), g);
  CHECK(seg.primary == std::vector<int>{0, 0, 0});
  CHECK(seg.regions.size() == 1);
}

TEST_CASE("masked cells break connectivity") {
  const GridSpec g(0.0, 0.0, 1.0, 1.0, 3, 1, {1, 0, 1});
  const SegmentationFrame seg = segment(Matrix::Ones(2, 1), counting_matrix(2), g);
  CHECK(seg.regions.size() == 2);
  CHECK(isolated_region_count(seg) == 2);
}

TEST_CASE("partition and stats conservation on random memberships") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::uint8_t> mask(48);
    for (auto& m : mask) m = u(rng) < 0.85 ? 1 : 0;
    mask[0] = 1;
    const GridSpec g(0.0, 0.0, 1.0, 1.0, 8, 6, mask);
    const int n = g.size();
    const int k = 2 + trial % 3;
    Matrix h(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) h(i, j) = u(rng);
    Matrix xd(2 * n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < 2 * n; ++i) xd(i, j) = std::floor(5.0 * u(rng));
    const FeatureMatrix x{0, xd};
    const SegmentationFrame seg = segment(h, x, g);

    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    double in = 0.0, out = 0.0;
    for (const auto& r : seg.regions) {
      in += r.inflow;
      out += r.outflow;
      CHECK(std::is_sorted(r.grids.begin(), r.grids.end()));
      for (int gi : r.grids) {
        ++seen[static_cast<std::size_t>(gi)];
        CHECK(seg.region_of[static_cast<std::size_t>(gi)] == r.id);
        CHECK(seg.primary[static_cast<std::size_t>(gi)] == r.pattern);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(in == doctest::Approx(xd.bottomRows(n).sum()));
    CHECK(out == doctest::Approx(xd.topRows(n).sum()));
    // Regions are exactly the connected components of equal labels.
    CHECK(testkit::adjusted_rand_index(seg.region_of, testkit::components(g, seg.primary)) ==
          doctest::Approx(1.0));
    // Ids follow the smallest member grid.
    for (std::size_t r = 1; r < seg.regions.size(); ++r) {
      CHECK(seg.regions[r - 1].grids.front() < seg.regions[r].grids.front());
    }

    const SegmentationFrame back = segmentation_from_index(index_json(seg));
    CHECK(back.primary == seg.primary);
    CHECK(back.region_of == seg.region_of);
    CHECK(back.regions.size() == seg.regions.size());
    CHECK(index_json(back) == index_json(seg));
  }
}

TEST_CASE("pattern cards and grid detail") {
  const FeatureMatrix x = counting_matrix(2);
  Matrix w(4, 2);
  w << 0.1, 0.5, 0.2, 0.0, 0.7, 0.1, 0.0, 0.4;
  LatentRegion r;
  r.id = 3;
  r.pattern = 1;
  const RegionPatternCard card = region_pattern_card(r, w, x);
  CHECK(card.region == 3);
  CHECK(card.feature.size() == 4);
  CHECK(card.inout_delta.size() == 2);
  CHECK(card.inout_delta(0) == doctest::Approx(0.1 - 0.5));
  CHECK(card.inout_delta(1) == doctest::Approx(0.4 - 0.0));
  r.pattern = 2;
  CHECK_THROWS_AS(region_pattern_card(r, w, x), Error);

  const GridDetail d = grid_detail(1, x);
  CHECK(d.outflow == x.data(0, 1) + x.data(1, 1));
  CHECK(d.inflow == x.data(2, 1) + x.data(3, 1));
  CHECK(d.total == d.inflow + d.outflow);
  CHECK(to_json(d).at("feature").size() == 4);
  CHECK_THROWS_AS(grid_detail(2, x), Error);
}

TEST_CASE("cell outlines") {
  SUBCASE("one cell is one counter-clockwise square") {
    const auto rings = trace_cell_rings({{2, 3}});
    REQUIRE(rings.size() == 1);
    CHECK(rings[0].size() == 5);
    CHECK(rings[0].front() == rings[0].back());
    CHECK(twice_area(rings[0]) == 2);
  }
  SUBCASE("a straight strip has four corners") {
    const auto rings = trace_cell_rings({{0, 0}, {1, 0}, {2, 0}});
    REQUIRE(rings.size() == 1);
    CHECK(rings[0].size() == 5);
    CHECK(twice_area(rings[0]) == 6);
  }
  SUBCASE("a ring of cells has a clockwise hole") {
    std::vector<std::pair<int, int>> cells;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        if (x != 1 || y != 1) cells.emplace_back(x, y);
    const auto rings = trace_cell_rings(cells);
    REQUIRE(rings.size() == 2);
    std::multiset<long long> areas;
    for (const auto& r : rings) areas.insert(twice_area(r));
    CHECK(areas == std::multiset<long long>{-2, 18});
  }
  SUBCASE("corner-touching cells stay separate") {
    const auto rings = trace_cell_rings({{0, 0}, {1, 1}});
    CHECK(rings.size() == 2);
  }
  SUBCASE("random cell sets: signed area equals the cell count") {
    std::mt19937_64 rng(9);
    std::bernoulli_distribution coin(0.55);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<std::pair<int, int>> cells;
      for (int x = 0; x < 7; ++x)
        for (int y = 0; y < 6; ++y)
          if (coin(rng)) cells.emplace_back(x, y);
      long long total = 0;
      for (const auto& r : trace_cell_rings(cells)) {
        CHECK(r.front() == r.back());
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
          // Axis-aligned edges only.
          CHECK((r[i].first == r[i + 1].first || r[i].second == r[i + 1].second));
        }
        total += twice_area(r);
      }
      CHECK(total == 2 * static_cast<long long>(cells.size()));
    }
  }
}

TEST_CASE("segmentation GeoJSON") {
  const GridSpec g(-74.0, 40.7, 0.01, 0.005, 3, 2);
  Matrix h(6, 2);
  h << 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1;  // checkerboard
  const SegmentationFrame seg = segment(h, counting_matrix(6), g);
  const auto doc = segmentation_geojson(seg, g);
  CHECK(doc.at("type") == "FeatureCollection");
  REQUIRE(doc.at("features").size() == seg.regions.size());
  for (const auto& f : doc.at("features")) {
    CHECK(f.at("type") == "Feature");
    const auto& props = f.at("properties");
    for (const char* key : {"id", "pattern", "color", "inflow", "outflow", "grids"}) {
      CHECK(props.contains(key));
    }
    const auto& geom = f.at("geometry");
    const std::string type = geom.at("type");
    CHECK((type == "Polygon" || type == "MultiPolygon"));
    const auto polys = type == "Polygon" ? nlohmann::json::array({geom.at("coordinates")})
                                         : geom.at("coordinates");
    for (const auto& poly : polys) {
      for (const auto& ring : poly) {
        CHECK(ring.front() == ring.back());
        for (const auto& pt : ring) {
          CHECK(pt.at(0).get<double>() >= -74.0 - 1e-12);
          CHECK(pt.at(0).get<double>() <= -73.97 + 1e-12);
          CHECK(pt.at(1).get<double>() >= 40.7 - 1e-12);
          CHECK(pt.at(1).get<double>() <= 40.71 + 1e-12);
        }
      }
    }
  }
  // Checkerboard cells touch only at corners, so each is its own region.
  bool multi = false;
  for (const auto& f : doc.at("features")) multi = multi || f.at("geometry").at("type") == "MultiPolygon";
  CHECK_FALSE(multi);
  CHECK(seg.regions.size() == 6);
}
