// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>

#include <nlohmann/json.hpp>

#include "regionflow/grid.hpp"
#include "regionflow/overview.hpp"
#include "regionflow/solver.hpp"

namespace regionflow {

struct BinningConfig {
  std::optional<std::int64_t> start;  // default: UTC midnight before the first pickup
  std::int64_t interval_len = 7200;
  int n_bins = 0;                     // 0: enough bins to cover the last pickup

  TimeBinning resolve(std::int64_t first_pickup, std::int64_t last_pickup) const;
};

/// Settings read from an INI file. Sections and keys:
///   [grid]      origin_lon origin_lat cell_lon cell_lat nx ny mask_file
///   [binning]   start interval n_bins
///   [solver]    alpha beta lambda ortho unit_norm max_iters warm_start_iters tol
///               seed k_max ortho_tol weight_mode log1p normalize_columns k
///               bandwidth
///   [overview]  dawn_end morning_end afternoon_end utc_offset_minutes
///   [evolution] min_width
/// Missing keys keep their defaults; unknown keys are rejected.
struct Config {
  std::optional<GridSpec> grid;
  BinningConfig binning;
  HyperParams solver;
  int fixed_k = 0;                  // > 0 uses this K for every frame
  std::optional<double> bandwidth;  // mean-shift bandwidth for choose_k
  DaypartBounds dayparts;
  int min_width = 1;

  void validate() const;
};

Config parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

/// Interval lengths like "7200", "90m", "2h", "1d".
std::int64_t parse_duration(const std::string& text);

/// Reads a mask file: one line per lattice row, north row first, '1' for
/// cells inside the study area and '0' otherwise.
std::vector<std::uint8_t> read_mask_file(const std::filesystem::path& path, int nx, int ny);

/// Run parameters as stored in the run manifest (solver, K policy,
/// dayparts, min_width).
nlohmann::json run_params_json(const Config& c);
/// Applies the keys present in `j` on top of `base`.
Config run_params_from_json(const nlohmann::json& j, Config base = {});

nlohmann::json to_json(const HyperParams& hp);

}  // namespace regionflow
