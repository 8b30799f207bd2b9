// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace regionflow {

/// Index of a masked (in-study-area) cell, in [0, N).
using GridIndex = int;

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

/// Regular lon/lat lattice anchored at its south-west corner. Only cells
/// whose mask bit is set take part in the analysis; they are numbered in
/// row-major order (iy outer, ix inner), skipping masked-out cells.
class GridSpec {
 public:
  GridSpec() = default;
  /// Empty mask means every cell is inside the study area.
  GridSpec(double origin_lon, double origin_lat, double cell_lon, double cell_lat,
           int nx, int ny, std::vector<std::uint8_t> mask = {});

  double origin_lon() const { return origin_lon_; }
  double origin_lat() const { return origin_lat_; }
  double cell_lon() const { return cell_lon_; }
  double cell_lat() const { return cell_lat_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  /// N, the number of masked cells.
  int size() const { return static_cast<int>(cells_.size()); }

  std::optional<GridIndex> index_of(int ix, int iy) const;
  std::pair<int, int> cell_of(GridIndex g) const { return cells_.at(static_cast<std::size_t>(g)); }
  LonLat cell_center(GridIndex g) const;
  /// South-west corner of lattice cell (ix, iy).
  LonLat corner(int ix, int iy) const;

  bool operator==(const GridSpec& other) const;

 private:
  double origin_lon_ = 0.0;
  double origin_lat_ = 0.0;
  double cell_lon_ = 0.0;
  double cell_lat_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<int> lattice_to_index_;  // -1 when masked out
  std::vector<std::pair<int, int>> cells_;
};

/// Fixed-width time bins; bin t covers [start + t*len, start + (t+1)*len).
struct TimeBinning {
  std::int64_t start = 0;
  std::int64_t interval_len = 0;
  int n_bins = 0;

  void validate() const;
  std::optional<int> bin_of(std::int64_t timestamp) const;
  std::int64_t bin_start(int t) const { return start + static_cast<std::int64_t>(t) * interval_len; }

  bool operator==(const TimeBinning&) const = default;
};

/// Masked-cell index containing (lon, lat), or nullopt when outside the
/// lattice or the mask. Lower cell edges are inclusive. Throws
/// invalid_input for non-finite coordinates.
std::optional<GridIndex> assign_grid(double lon, double lat, const GridSpec& grid);

}  // namespace regionflow
