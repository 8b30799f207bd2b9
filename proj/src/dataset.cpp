// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/dataset.hpp"

#include <cstdio>

#include "regionflow/error.hpp"

namespace regionflow {
namespace fs = std::filesystem;
using json = nlohmann::json;

std::string frame_tag(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", t);
  return buf;
}

json to_json(const GridSpec& grid) {
  // Mask rows are stored south to north, one string of '0'/'1' per row.
  json rows = json::array();
  for (int iy = 0; iy < grid.ny(); ++iy) {
    std::string row;
    for (int ix = 0; ix < grid.nx(); ++ix) {
      row += grid.mask()[static_cast<std::size_t>(iy) * grid.nx() + ix] ? '1' : '0';
    }
    rows.push_back(row);
  }
  return {{"origin_lon", grid.origin_lon()}, {"origin_lat", grid.origin_lat()},
          {"cell_lon", grid.cell_lon()},     {"cell_lat", grid.cell_lat()},
          {"nx", grid.nx()},                 {"ny", grid.ny()},
          {"mask", rows},                    {"n_grids", grid.size()}};
}

GridSpec grid_from_json(const json& j) {
  const int nx = j.at("nx").get<int>();
  const int ny = j.at("ny").get<int>();
  std::vector<std::uint8_t> mask;
  if (j.contains("mask")) {
    for (const auto& row : j.at("mask")) {
      for (char c : row.get<std::string>()) mask.push_back(c == '1' ? 1 : 0);
    }
  }
  return GridSpec(j.at("origin_lon").get<double>(), j.at("origin_lat").get<double>(),
                  j.at("cell_lon").get<double>(), j.at("cell_lat").get<double>(), nx, ny,
                  std::move(mask));
}

json to_json(const TimeBinning& bins) {
  return {{"start", bins.start}, {"interval_len", bins.interval_len}, {"n_bins", bins.n_bins}};
}

TimeBinning binning_from_json(const json& j) {
  TimeBinning b{j.at("start").get<std::int64_t>(), j.at("interval_len").get<std::int64_t>(),
                j.at("n_bins").get<int>()};
  b.validate();
  return b;
}

json to_json(const IngestReport& report) {
  return {{"rows_read", report.rows_read},
          {"usable", report.usable},
          {"skipped", report.skipped_total()},
          {"skipped_by_reason", report.skipped}};
}

json to_json(const FlowHistogram& h) {
  return {{"grid", h.grid}, {"t", h.t},          {"out_bins", h.out_bins},
          {"in_bins", h.in_bins}, {"intra", h.intra}, {"total", h.total}};
}

Dataset make_dataset(std::string id, std::span<const TripRecord> trips, const GridSpec& grid,
                     const TimeBinning& bins, IngestReport report) {
  Dataset ds;
  ds.info.id = std::move(id);
  ds.info.grid = grid;
  ds.info.binning = bins;
  ds.features = build_feature_series(trips, grid, bins, &report);
  ds.flows = build_flow_histograms(trips, grid, bins);
  ds.info.report = std::move(report);
  return ds;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "flows");
  const int n = ds.info.grid.size();
  for (const auto& x : ds.features) write_matrix(dir / "features" / ("X_" + frame_tag(x.t)), x.data);
  for (int t = 0; t < ds.info.binning.n_bins; ++t) {
    json grids = json::array();
    for (int g = 0; g < n; ++g) {
      const auto& h = ds.flows.at(static_cast<std::size_t>(t) * n + g);
      if (h.total > 0) grids.push_back(to_json(h));
    }
    write_file_atomic(dir / "flows" / ("flows_" + frame_tag(t) + ".json"),
                      json{{"t", t}, {"bins", kDirectionBins}, {"grids", grids}}.dump() + "\n");
  }
  const json meta = {{"format", "regionflow-dataset"},
                     {"version", kDatasetFormatVersion},
                     {"id", ds.info.id},
                     {"grid", to_json(ds.info.grid)},
                     {"binning", to_json(ds.info.binning)},
                     {"report", to_json(ds.info.report)}};
  write_file_atomic(dir / "dataset.json", meta.dump(2) + "\n");
}

DatasetInfo read_dataset_info(const fs::path& dir) {
  const json meta = json::parse(read_file(dir / "dataset.json"));
  if (meta.value("format", "") != "regionflow-dataset" ||
      meta.value("version", 0) != kDatasetFormatVersion) {
    fail(ErrorCode::io_error, "unsupported dataset manifest in " + dir.string());
  }
  DatasetInfo info;
  info.id = meta.at("id").get<std::string>();
  info.grid = grid_from_json(meta.at("grid"));
  info.binning = binning_from_json(meta.at("binning"));
  const auto& r = meta.at("report");
  info.report.rows_read = r.at("rows_read").get<std::int64_t>();
  info.report.usable = r.at("usable").get<std::int64_t>();
  info.report.skipped = r.at("skipped_by_reason").get<std::map<std::string, std::int64_t>>();
  return info;
}

FeatureMatrix read_feature_matrix(const fs::path& dir, int t) {
  return {t, read_matrix(dir / "features" / ("X_" + frame_tag(t)))};
}

std::vector<FeatureMatrix> read_feature_series(const fs::path& dir) {
  const auto info = read_dataset_info(dir);
  std::vector<FeatureMatrix> series;
  for (int t = 0; t < info.binning.n_bins; ++t) series.push_back(read_feature_matrix(dir, t));
  return series;
}

std::vector<FlowHistogram> read_flow_histograms(const fs::path& dir, const DatasetInfo& info,
                                                int t) {
  const int n = info.grid.size();
  std::vector<FlowHistogram> out(static_cast<std::size_t>(n));
  for (int g = 0; g < n; ++g) {
    out[static_cast<std::size_t>(g)].grid = g;
    out[static_cast<std::size_t>(g)].t = t;
  }
  const json doc = json::parse(read_file(dir / "flows" / ("flows_" + frame_tag(t) + ".json")));
  for (const auto& e : doc.at("grids")) {
    auto& h = out.at(e.at("grid").get<std::size_t>());
    h.out_bins = e.at("out_bins").get<std::array<std::int64_t, kDirectionBins>>();
    h.in_bins = e.at("in_bins").get<std::array<std::int64_t, kDirectionBins>>();
    h.intra = e.at("intra").get<std::int64_t>();
    h.total = e.at("total").get<std::int64_t>();
  }
  return out;
}

}  // namespace regionflow
