// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "regionflow/grid.hpp"
#include "regionflow/matrix_io.hpp"

namespace regionflow {

/// One taxi trip. Times are UTC epoch seconds.
struct TripRecord {
  std::int64_t pickup_time = 0;
  std::int64_t dropoff_time = 0;
  double pickup_lon = 0.0;
  double pickup_lat = 0.0;
  double dropoff_lon = 0.0;
  double dropoff_lat = 0.0;

  /// pickup <= dropoff and all coordinates finite.
  bool valid() const;
};

/// 2N x N trip counts for one time bin. Column i describes grid i: rows
/// [0, N) count trips leaving i by destination, rows [N, 2N) count trips
/// arriving at i by origin.
struct FeatureMatrix {
  int t = 0;
  Matrix data;

  int grids() const { return static_cast<int>(data.cols()); }
  double outflow(GridIndex g) const;
  double inflow(GridIndex g) const;
  double total_trips() const;
};

/// Undirected 4-neighbourhood graph over masked cells. Edges are stored
/// once with first < second.
struct AdjacencyGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> neighbors;

  bool adjacent(int i, int j) const;
  int degree(int i) const { return static_cast<int>(neighbors.at(static_cast<std::size_t>(i)).size()); }
};

inline constexpr int kDirectionBins = 72;

/// Directional flow summary for one grid in one bin. Bin b covers bearings
/// [5b, 5b+5) degrees, north = 0, clockwise. A trip adds its heading (pickup
/// cell centre to dropoff cell centre) to out_bins of the pickup grid and to
/// in_bins of the dropoff grid. Trips within one grid only count towards
/// `intra`.
struct FlowHistogram {
  GridIndex grid = 0;
  int t = 0;
  std::array<std::int64_t, kDirectionBins> out_bins{};
  std::array<std::int64_t, kDirectionBins> in_bins{};
  std::int64_t intra = 0;
  /// sum(out_bins) + sum(in_bins) + intra.
  std::int64_t total = 0;
};

enum class SkipReason { malformed, invalid, out_of_area, out_of_range };
const char* to_string(SkipReason r);

struct IngestReport {
  std::int64_t rows_read = 0;
  std::int64_t usable = 0;
  std::map<std::string, std::int64_t> skipped;  // by SkipReason name

  std::int64_t skipped_total() const;
  void skip(SkipReason r, std::int64_t n = 1) { skipped[to_string(r)] += n; }
};

/// Bearing in [0, 360) from `from` to `to`, north = 0, clockwise, on an
/// equirectangular approximation scaled by cos(mean latitude).
double bearing_deg(LonLat from, LonLat to);
int direction_bin(double bearing);

/// One matrix per bin. A trip from grid i to grid j picked up in bin t adds
/// one to X_t(j, i) and one to X_t(N + i, j). Trips outside the bins or the
/// grid are skipped and tallied in `report`. Throws empty_dataset when no
/// trip is usable.
std::vector<FeatureMatrix> build_feature_series(std::span<const TripRecord> trips,
                                                const GridSpec& grid,
                                                const TimeBinning& bins,
                                                IngestReport* report = nullptr);

AdjacencyGraph build_adjacency(const GridSpec& grid);

/// N histograms per bin, ordered by (t, grid).
std::vector<FlowHistogram> build_flow_histograms(std::span<const TripRecord> trips,
                                                 const GridSpec& grid,
                                                 const TimeBinning& bins);

}  // namespace regionflow
