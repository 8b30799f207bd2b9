// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/grid.hpp"

#include <cmath>
#include <string>

#include "regionflow/error.hpp"

namespace regionflow {

GridSpec::GridSpec(double origin_lon, double origin_lat, double cell_lon, double cell_lat,
                   int nx, int ny, std::vector<std::uint8_t> mask)
    : origin_lon_(origin_lon),
      origin_lat_(origin_lat),
      cell_lon_(cell_lon),
      cell_lat_(cell_lat),
      nx_(nx),
      ny_(ny),
      mask_(std::move(mask)) {
  if (!std::isfinite(origin_lon) || !std::isfinite(origin_lat)) {
    fail(ErrorCode::invalid_input, "grid origin must be finite");
  }
  if (!(cell_lon > 0.0) || !(cell_lat > 0.0) || !std::isfinite(cell_lon) ||
      !std::isfinite(cell_lat)) {
    fail(ErrorCode::invalid_input, "grid cell size must be positive");
  }
  if (nx <= 0 || ny <= 0) fail(ErrorCode::invalid_input, "grid must have nx, ny >= 1");
  const auto cells = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  if (mask_.empty()) mask_.assign(cells, 1);
  if (mask_.size() != cells) {
    fail(ErrorCode::invalid_input, "grid mask has " + std::to_string(mask_.size()) +
                                       " entries, expected " + std::to_string(cells));
  }
  lattice_to_index_.assign(cells, -1);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const auto k = static_cast<std::size_t>(iy) * nx + ix;
      if (mask_[k] != 0) {
        mask_[k] = 1;
        lattice_to_index_[k] = static_cast<int>(cells_.size());
        cells_.emplace_back(ix, iy);
      }
    }
  }
}

std::optional<GridIndex> GridSpec::index_of(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return std::nullopt;
  const int idx = lattice_to_index_[static_cast<std::size_t>(iy) * nx_ + ix];
  if (idx < 0) return std::nullopt;
  return idx;
}

LonLat GridSpec::cell_center(GridIndex g) const {
  const auto [ix, iy] = cell_of(g);
  return {origin_lon_ + (ix + 0.5) * cell_lon_, origin_lat_ + (iy + 0.5) * cell_lat_};
}

LonLat GridSpec::corner(int ix, int iy) const {
  return {origin_lon_ + ix * cell_lon_, origin_lat_ + iy * cell_lat_};
}

bool GridSpec::operator==(const GridSpec& o) const {
  return origin_lon_ == o.origin_lon_ && origin_lat_ == o.origin_lat_ &&
         cell_lon_ == o.cell_lon_ && cell_lat_ == o.cell_lat_ && nx_ == o.nx_ &&
         ny_ == o.ny_ && mask_ == o.mask_;
}

void TimeBinning::validate() const {
  if (interval_len <= 0) fail(ErrorCode::invalid_input, "interval_len must be positive");
  if (n_bins <= 0) fail(ErrorCode::invalid_input, "n_bins must be positive");
}

std::optional<int> TimeBinning::bin_of(std::int64_t timestamp) const {
  if (timestamp < start) return std::nullopt;
  const std::int64_t t = (timestamp - start) / interval_len;
  if (t >= n_bins) return std::nullopt;
  return static_cast<int>(t);
}

std::optional<GridIndex> assign_grid(double lon, double lat, const GridSpec& grid) {
  if (!std::isfinite(lon) || !std::isfinite(lat)) {
    fail(ErrorCode::invalid_input, "non-finite coordinate");
  }
  const double fx = std::floor((lon - grid.origin_lon()) / grid.cell_lon());
  const double fy = std::floor((lat - grid.origin_lat()) / grid.cell_lat());
  if (fx < 0 || fy < 0 || fx >= grid.nx() || fy >= grid.ny()) return std::nullopt;
  return grid.index_of(static_cast<int>(fx), static_cast<int>(fy));
}

}  // namespace regionflow
