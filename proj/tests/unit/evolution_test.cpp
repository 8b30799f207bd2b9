// Licensed under the Apache License 2.0 (see LICENSE file).

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "regionflow/assignment.hpp"
#include "regionflow/error.hpp"
#include "regionflow/evolution.hpp"
#include "regionflow/regions.hpp"
#include "testkit.hpp"

using namespace regionflow;

namespace {

// A segmentation frame straight from per-grid region ids (ids 0..R-1).
SegmentationFrame frame_of(int t, const std::vector<int>& region_of) {
  SegmentationFrame f;
  f.t = t;
  f.region_of = region_of;
  f.primary = region_of;
  const int r = region_of.empty() ? 0 : *std::max_element(region_of.begin(), region_of.end()) + 1;
  f.k = r;
  f.regions.resize(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    f.regions[static_cast<std::size_t>(i)].id = i;
    f.regions[static_cast<std::size_t>(i)].pattern = i;
  }
  for (std::size_t g = 0; g < region_of.size(); ++g) {
    f.regions[static_cast<std::size_t>(region_of[g])].grids.push_back(static_cast<int>(g));
  }
  return f;
}

std::vector<int> region_ids(std::vector<int> sizes) {
  std::vector<int> out;
  for (std::size_t r = 0; r < sizes.size(); ++r) out.insert(out.end(), static_cast<std::size_t>(sizes[r]), static_cast<int>(r));
  return out;
}

ColorAssignment identity_colors(int n) {
  ColorAssignment c;
  for (int i = 0; i < n; ++i) c.labels[i] = i;
  c.next_label = n;
  return c;
}

// All matchings (including partial ones) by brute force: the max total and
// the lexicographically preferred optimum (per left id ascending: lowest
// right id, unmatched last).
struct Brute {
  std::int64_t best = -1;
  std::vector<int> choice;
};

void brute(const std::vector<std::vector<int>>& w, std::size_t l, std::vector<bool>& used,
           std::vector<int>& cur, std::int64_t acc, Brute& out) {
  if (l == w.size()) {
    if (acc > out.best) {
      out.best = acc;
      out.choice = cur;
    }
    return;  // enumeration order visits preferred optima first
  }
  for (std::size_t r = 0; r < used.size(); ++r) {
    if (used[r] || w[l][r] <= 0) continue;
    used[r] = true;
    cur[l] = static_cast<int>(r);
    brute(w, l + 1, used, cur, acc + w[l][r], out);
    used[r] = false;
  }
  cur[l] = -1;
  brute(w, l + 1, used, cur, acc, out);
}

}  // namespace

TEST_CASE("overlap counts shared grids") {
  const auto a = frame_of(0, {0, 0, 0, 1, 1, 1});
  const auto b = frame_of(1, {0, 0, 1, 1, 2, 2});
  const OverlapGraph o = overlap(a, b);
  CHECK(o.t == 1);
  CHECK(o.left == std::vector<int>{0, 1});
  CHECK(o.right == std::vector<int>{0, 1, 2});
  CHECK(o.weight(0, 0) == 2);
  CHECK(o.weight(0, 1) == 1);
  CHECK(o.weight(1, 1) == 1);
  CHECK(o.weight(1, 2) == 2);
  CHECK(o.weight(1, 0) == 0);
  CHECK(o.weights.size() == 4);
  CHECK_THROWS_AS(overlap(a, frame_of(1, {0, 0, 0})), Error);
}

TEST_CASE("maximum-weight assignment") {
  CHECK(max_weight_assignment({{5, 1}, {2, 6}}) == std::vector<int>{0, 1});
  CHECK(max_weight_assignment({{1, 5}, {6, 2}}) == std::vector<int>{1, 0});
  const auto rect = max_weight_assignment({{1, 9, 3}});
  CHECK(rect == std::vector<int>{1});
  const auto tall = max_weight_assignment({{4}, {7}, {1}});
  CHECK(std::count(tall.begin(), tall.end(), -1) == 2);
  CHECK(tall[1] == 0);
  CHECK(max_weight_assignment({}).empty());

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + trial % 5, cols = 1 + (trial / 5) % 5;
    std::uniform_int_distribution<int> u(0, 6);
    std::vector<std::vector<int>> w(static_cast<std::size_t>(rows), std::vector<int>(static_cast<std::size_t>(cols)));
    std::vector<std::vector<std::int64_t>> w64(w.size(), std::vector<std::int64_t>(static_cast<std::size_t>(cols)));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w64[i][j] = w[i][j] = u(rng);
    const auto m = max_weight_assignment(w64);
    std::int64_t total = 0;
    std::vector<bool> seen(static_cast<std::size_t>(cols), false);
    for (int i = 0; i < rows; ++i) {
      if (m[i] < 0) continue;
      CHECK_FALSE(seen[static_cast<std::size_t>(m[i])]);
      seen[static_cast<std::size_t>(m[i])] = true;
      total += w[i][m[i]];
    }
    CHECK(total == testkit::brute_force_matching(w));
  }
}

TEST_CASE("label inheritance") {
  SUBCASE("overlaps [[5,1],[2,6]] keep both labels") {
    const auto a = frame_of(0, region_ids({6, 8}));
    std::vector<int> cur(14);
    for (int g = 0; g < 14; ++g) cur[static_cast<std::size_t>(g)] = g < 5 ? 0 : (g < 6 ? 1 : (g < 8 ? 0 : 1));
    const auto b = frame_of(1, cur);
    const OverlapGraph o = overlap(a, b);
    CHECK(o.weight(0, 0) == 5);
    CHECK(o.weight(0, 1) == 1);
    CHECK(o.weight(1, 0) == 2);
    CHECK(o.weight(1, 1) == 6);
    const ColorAssignment c = match_colors(o, identity_colors(2));
    CHECK(c.matched_weight == 11);
    CHECK(c.labels.at(0) == 0);
    CHECK(c.labels.at(1) == 1);
    CHECK(c.next_label == 2);
  }
  SUBCASE("a split gives the smaller piece a fresh label") {
    const auto a = frame_of(0, {0, 0, 0, 0, 0, 1});
    const auto b = frame_of(1, {0, 0, 0, 1, 1, 2});
    const ColorAssignment c = match_colors(overlap(a, b), identity_colors(2));
    CHECK(c.labels.at(0) == 0);
    CHECK(c.labels.at(1) == 2);
    CHECK(c.labels.at(2) == 1);
    CHECK(c.next_label == 3);
  }
  SUBCASE("equal overlaps prefer lower ids") {
    const auto a = frame_of(0, {0, 0, 1, 1});
    const auto b = frame_of(1, {0, 1, 0, 1});
    const ColorAssignment c = match_colors(overlap(a, b), identity_colors(2));
    CHECK(c.matched == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  }
  SUBCASE("zero overlap never inherits") {
    OverlapGraph o;
    o.left = {0};
    o.right = {0};
    const ColorAssignment c = match_colors(o, identity_colors(1));
    CHECK(c.matched.empty());
    CHECK(c.labels.at(0) == 1);
  }
}

TEST_CASE("matching is optimal and follows the tie rule on random overlaps") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 12;
    std::uniform_int_distribution<int> ra(0, 1 + trial % 4), rb(0, 1 + (trial / 4) % 4);
    std::vector<int> la(n), lb(n);
    for (int g = 0; g < n; ++g) {
      la[static_cast<std::size_t>(g)] = ra(rng);
      lb[static_cast<std::size_t>(g)] = rb(rng);
    }
    // Compact ids so every region is non-empty.
    for (auto* v : {&la, &lb}) {
      std::map<int, int> ids;
      for (int& x : *v) x = ids.emplace(x, static_cast<int>(ids.size())).first->second;
    }
    const auto a = frame_of(0, la), b = frame_of(1, lb);
    const OverlapGraph o = overlap(a, b);
    std::vector<std::vector<int>> w(o.left.size(), std::vector<int>(o.right.size()));
    for (std::size_t l = 0; l < o.left.size(); ++l)
      for (std::size_t r = 0; r < o.right.size(); ++r) w[l][r] = o.weight(static_cast<int>(l), static_cast<int>(r));
    Brute best;
    std::vector<bool> used(o.right.size(), false);
    std::vector<int> cur(o.left.size(), -1);
    brute(w, 0, used, cur, 0, best);
    const ColorAssignment c = match_colors(o, identity_colors(static_cast<int>(o.left.size())));
    CHECK(c.matched_weight == best.best);
    std::vector<std::pair<int, int>> expect;
    for (std::size_t l = 0; l < best.choice.size(); ++l)
      if (best.choice[l] >= 0) expect.emplace_back(static_cast<int>(l), best.choice[l]);
    CHECK(c.matched == expect);
    // Every right region has a distinct label.
    std::set<int> labels;
    for (const auto& [id, lab] : c.labels) labels.insert(lab);
    CHECK(labels.size() == o.right.size());
  }
}

TEST_CASE("evolution graph") {
  const std::vector<SegmentationFrame> frames{frame_of(0, {0, 0, 0, 1, 1, 1}), frame_of(1, {0, 0, 0, 0, 0, 0}),
                                              frame_of(2, {0, 0, 1, 1, 2, 2})};
  const EvolutionGraph g = build_evolution(frames);
  REQUIRE(g.nodes.size() == 3);
  CHECK(g.nodes[0].size() == 2);
  CHECK(g.nodes[1].size() == 1);
  CHECK(g.nodes[1][0].label == 0);  // the merge keeps the lower label on a tie
  CHECK(g.nodes[1][0].size == 6);
  // Links carry the later frame's index and conserve grid counts.
  for (int t = 1; t <= 2; ++t) {
    int width = 0;
    for (const auto& l : g.links) {
      if (l.t == t) width += l.width;
    }
    CHECK(width == 6);
  }
  std::map<std::pair<int, int>, int> into;  // (t, dst) -> total width
  for (const auto& l : g.links) into[{l.t, l.dst}] += l.width;
  for (std::size_t t = 1; t < frames.size(); ++t)
    for (const auto& n : g.nodes[t]) CHECK(into[{n.t, n.id}] == n.size);

  const auto doc = to_json(g);
  CHECK(doc.at("nodes").size() == 6);
  CHECK(doc.at("links").size() == g.links.size());
  const auto narrow = std::count_if(g.links.begin(), g.links.end(), [](const EvolutionLink& l) { return l.width < 3; });
  CHECK(narrow > 0);
  CHECK(to_json(g, 3).at("links").size() == g.links.size() - static_cast<std::size_t>(narrow));
  for (const auto& l : to_json(g, 3).at("links")) CHECK(l.at("width").get<int>() >= 3);

  const EvolutionGraph back = evolution_from_json(doc);
  CHECK(to_json(back) == doc);
  REQUIRE(back.colors.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(back.colors[t].labels == g.colors[t].labels);

  std::vector<SegmentationFrame> colored = frames;
  apply_colors(colored, g);
  for (std::size_t t = 0; t < 3; ++t)
    for (const auto& r : colored[t].regions) CHECK(r.color == g.colors[t].labels.at(r.id));
  CHECK(build_evolution(frames).links.size() == g.links.size());
  CHECK_THROWS_AS(build_evolution({}), Error);
}

TEST_CASE("unchanged frames keep their labels") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 4);
  std::vector<int> ids(30);
  for (auto& x : ids) x = u(rng);
  std::map<int, int> compact;
  for (int& x : ids) x = compact.emplace(x, static_cast<int>(compact.size())).first->second;
  std::vector<SegmentationFrame> frames;
  for (int t = 0; t < 5; ++t) frames.push_back(frame_of(t, ids));
  const EvolutionGraph g = build_evolution(frames);
  for (std::size_t t = 1; t < 5; ++t) CHECK(g.colors[t].labels == g.colors[0].labels);
}

TEST_CASE("district seeding") {
  const GridSpec grid(0.0, 0.0, 1.0, 1.0, 4, 1);
  const nlohmann::json districts = {
      {"type", "FeatureCollection"},
      {"features",
       {{{"type", "Feature"},
         {"properties", {{"label", 7}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", {{{0, 0}, {2, 0}, {2, 1}, {0, 1}, {0, 0}}}}}}},
        {{"type", "Feature"},
         {"properties", nlohmann::json::object()},
         {"geometry",
          {{"type", "MultiPolygon"}, {"coordinates", {{{{2, 0}, {3, 0}, {3, 1}, {2, 1}, {2, 0}}}}}}}}}}};
  const auto labels = district_labels(districts, grid);
  CHECK(labels == std::vector<int>{7, 7, 1, -1});
  CHECK_THROWS_AS(district_labels(nlohmann::json{{"type", "Feature"}}, grid), Error);

  const auto first = frame_of(0, {0, 1, 1, 2});
  const ColorAssignment c = seed_colors(first, labels);
  CHECK(c.labels.at(0) == 7);
  CHECK(c.labels.at(1) == 1);  // 7 already went to region 0
  CHECK(c.labels.at(2) == 8);  // no district: fresh label after the largest
  CHECK(c.next_label == 9);
  const ColorAssignment plain = seed_colors(first);
  CHECK(plain.labels == std::map<int, int>{{0, 0}, {1, 1}, {2, 2}});
  CHECK_THROWS_AS(seed_colors(first, std::vector<int>{1, 2}), Error);
}
