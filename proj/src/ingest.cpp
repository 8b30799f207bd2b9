// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "regionflow/error.hpp"

namespace regionflow {

bool TripRecord::valid() const {
  return pickup_time <= dropoff_time && std::isfinite(pickup_lon) &&
         std::isfinite(pickup_lat) && std::isfinite(dropoff_lon) && std::isfinite(dropoff_lat);
}

double FeatureMatrix::outflow(GridIndex g) const {
  return data.col(g).head(grids()).sum();
}

double FeatureMatrix::inflow(GridIndex g) const {
  return data.col(g).tail(grids()).sum();
}

double FeatureMatrix::total_trips() const {
  return data.topRows(grids()).sum();
}

bool AdjacencyGraph::adjacent(int i, int j) const {
  const auto& nb = neighbors.at(static_cast<std::size_t>(i));
  return std::find(nb.begin(), nb.end(), j) != nb.end();
}

const char* to_string(SkipReason r) {
  switch (r) {
    case SkipReason::malformed: return "malformed";
    case SkipReason::invalid: return "invalid";
    case SkipReason::out_of_area: return "out_of_area";
    case SkipReason::out_of_range: return "out_of_range";
  }
  return "malformed";
}

std::int64_t IngestReport::skipped_total() const {
  std::int64_t n = 0;
  for (const auto& [_, c] : skipped) n += c;
  return n;
}

double bearing_deg(LonLat from, LonLat to) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double mean_lat = 0.5 * (from.lat + to.lat) * kDeg;
  const double dx = (to.lon - from.lon) * std::cos(mean_lat);
  const double dy = to.lat - from.lat;
  double b = std::atan2(dx, dy) / kDeg;
  if (b < 0.0) b += 360.0;
  if (b >= 360.0) b -= 360.0;
  return b;
}

int direction_bin(double bearing) {
  const int b = static_cast<int>(std::floor(bearing / 5.0));
  return ((b % kDirectionBins) + kDirectionBins) % kDirectionBins;
}

namespace {

struct Located {
  int t;
  GridIndex from;
  GridIndex to;
};

// Locates a trip on the grid and in time; records the skip reason otherwise.
std::optional<Located> locate(const TripRecord& trip, const GridSpec& grid,
                              const TimeBinning& bins, IngestReport* report) {
  auto skip = [&](SkipReason r) -> std::optional<Located> {
    if (report) report->skip(r);
    return std::nullopt;
  };
  if (!trip.valid()) return skip(SkipReason::invalid);
  const auto t = bins.bin_of(trip.pickup_time);
  if (!t) return skip(SkipReason::out_of_range);
  const auto from = assign_grid(trip.pickup_lon, trip.pickup_lat, grid);
  const auto to = assign_grid(trip.dropoff_lon, trip.dropoff_lat, grid);
  if (!from || !to) return skip(SkipReason::out_of_area);
  return Located{*t, *from, *to};
}

}  // namespace

std::vector<FeatureMatrix> build_feature_series(std::span<const TripRecord> trips,
                                                const GridSpec& grid,
                                                const TimeBinning& bins,
                                                IngestReport* report) {
  bins.validate();
  const int n = grid.size();
  std::vector<FeatureMatrix> series(static_cast<std::size_t>(bins.n_bins));
  for (int t = 0; t < bins.n_bins; ++t) {
    series[static_cast<std::size_t>(t)].t = t;
    series[static_cast<std::size_t>(t)].data = Matrix::Zero(2 * n, n);
  }
  std::int64_t usable = 0;
  for (const auto& trip : trips) {
    const auto loc = locate(trip, grid, bins, report);
    if (!loc) continue;
    Matrix& x = series[static_cast<std::size_t>(loc->t)].data;
    x(loc->to, loc->from) += 1.0;
    x(n + loc->from, loc->to) += 1.0;
    ++usable;
  }
  if (report) report->usable += usable;
  if (usable == 0) fail(ErrorCode::empty_dataset, "no usable trips");
  return series;
}

AdjacencyGraph build_adjacency(const GridSpec& grid) {
  AdjacencyGraph g;
  g.n = grid.size();
  g.neighbors.assign(static_cast<std::size_t>(g.n), {});
  for (int i = 0; i < g.n; ++i) {
    const auto [ix, iy] = grid.cell_of(i);
    // East and north neighbours only, so each edge is visited once.
    for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
      if (const auto j = grid.index_of(ix + dx, iy + dy)) {
        g.edges.emplace_back(std::min(i, *j), std::max(i, *j));
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  for (const auto& [a, b] : g.edges) {
    g.neighbors[static_cast<std::size_t>(a)].push_back(b);
    g.neighbors[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

std::vector<FlowHistogram> build_flow_histograms(std::span<const TripRecord> trips,
                                                 const GridSpec& grid,
                                                 const TimeBinning& bins) {
  bins.validate();
  const int n = grid.size();
  std::vector<FlowHistogram> hist(static_cast<std::size_t>(bins.n_bins) * n);
  for (int t = 0; t < bins.n_bins; ++t) {
    for (int g = 0; g < n; ++g) {
      auto& h = hist[static_cast<std::size_t>(t) * n + g];
      h.t = t;
      h.grid = g;
    }
  }
  for (const auto& trip : trips) {
    const auto loc = locate(trip, grid, bins, nullptr);
    if (!loc) continue;
    const auto base = static_cast<std::size_t>(loc->t) * n;
    auto& src = hist[base + loc->from];
    auto& dst = hist[base + loc->to];
    if (loc->from == loc->to) {
      ++src.intra;
      ++src.total;
      continue;
    }
    // Both endpoints record the trip's heading.
    const auto bin = static_cast<std::size_t>(
        direction_bin(bearing_deg(grid.cell_center(loc->from), grid.cell_center(loc->to))));
    ++src.out_bins[bin];
    ++src.total;
    ++dst.in_bins[bin];
    ++dst.total;
  }
  return hist;
}

}  // namespace regionflow
