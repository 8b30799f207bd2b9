// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/ingest.hpp"

namespace regionflow {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetInfo {
  std::string id;
  GridSpec grid;
  TimeBinning binning;
  IngestReport report;
};

struct Dataset {
  DatasetInfo info;
  std::vector<FeatureMatrix> features;
  std::vector<FlowHistogram> flows;  // ordered by (t, grid)
};

nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TimeBinning& bins);
TimeBinning binning_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IngestReport& report);
nlohmann::json to_json(const FlowHistogram& h);

/// Builds a dataset from parsed trips; `report` carries rows_read and
/// malformed counts from the CSV stage and is extended here.
Dataset make_dataset(std::string id, std::span<const TripRecord> trips, const GridSpec& grid,
                     const TimeBinning& bins, IngestReport report);

// Directory layout (see docs/FORMATS.md):
//   dataset.json                 grid, binning, ingest report
//   features/X_<tttt>.{bin,json} per-bin feature matrices
//   flows/flows_<tttt>.json      per-bin flow histograms (grids with traffic)
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
DatasetInfo read_dataset_info(const std::filesystem::path& dir);
FeatureMatrix read_feature_matrix(const std::filesystem::path& dir, int t);
std::vector<FeatureMatrix> read_feature_series(const std::filesystem::path& dir);
/// All N histograms for bin t, grids without traffic included as zeros.
std::vector<FlowHistogram> read_flow_histograms(const std::filesystem::path& dir,
                                                const DatasetInfo& info, int t);

std::string frame_tag(int t);

}  // namespace regionflow
