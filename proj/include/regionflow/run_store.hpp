// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/config.hpp"
#include "regionflow/dataset.hpp"
#include "regionflow/regions.hpp"
#include "regionflow/solver.hpp"

namespace regionflow {

enum class RunState { pending, solving, done, failed };

std::string to_string(RunState s);
RunState run_state_from_string(const std::string& s);

struct FrameSummary {
  int t = 0;
  int k = 0;
  double objective = 0.0;
  double penalized = 0.0;
  double ortho_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct RunManifest {
  std::string id;
  std::string dataset;
  nlohmann::json params;  // run_params_json
  RunState state = RunState::pending;
  int frame = -1;         // frame being solved, or the frame that failed
  std::string message;
  int n_frames = 0;       // frames in the dataset
  std::vector<FrameSummary> frames;  // solved so far, in order
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

struct Snapshot {
  std::string id;
  std::string run;
  int t = 0;
  std::string created_at;  // ISO-8601 UTC
  std::string note;
  nlohmann::json segmentation;  // GeoJSON at capture time
  nlohmann::json index;         // grid-to-region index at capture time
};

nlohmann::json to_json(const Snapshot& s);

/// Directory-backed store:
///   <root>/datasets/<id>/...   see dataset.hpp
///   <root>/runs/<id>/run.json, frames/<tttt>/..., evolution.json,
///   overview.json, overrides.json, snapshots/<id>.json
/// Files are replaced atomically. Writes to one run are serialised.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dataset_dir(const std::string& id) const;
  std::filesystem::path run_dir(const std::string& id) const;
  std::filesystem::path frame_dir(const std::string& run, int t) const;

  std::vector<std::string> list_datasets() const;
  std::vector<std::string> list_runs() const;
  bool has_dataset(const std::string& id) const;
  bool has_run(const std::string& id) const;
  /// Throws not_found.
  DatasetInfo dataset_info(const std::string& id) const;

  RunManifest read_manifest(const std::string& run) const;
  void write_manifest(const RunManifest& m);

  void write_frame(const std::string& run, const FactorizationFrame& f);
  /// Factors and summary of a solved frame; objective_trace included.
  FactorizationFrame read_frame(const std::string& run, int t) const;

  void write_json(const std::string& run, const std::filesystem::path& rel, const nlohmann::json& j);
  nlohmann::json read_json(const std::string& run, const std::filesystem::path& rel) const;

  /// Effective overrides per frame after replaying the mutation log.
  std::map<int, Overrides> overrides(const std::string& run) const;
  Overrides overrides(const std::string& run, int t) const;
  nlohmann::json override_log(const std::string& run) const;
  /// Appends a "set" entry pinning grids of frame t.
  void set_overrides(const std::string& run, int t, const Overrides& pins);
  /// Appends a "clear" entry; no grids means all pins of frame t.
  void clear_overrides(const std::string& run, int t, const std::vector<GridIndex>& grids = {});

  Snapshot add_snapshot(const std::string& run, int t, const std::string& note,
                        const nlohmann::json& segmentation, const nlohmann::json& index);
  std::vector<Snapshot> list_snapshots(const std::string& run) const;
  Snapshot read_snapshot(const std::string& run, const std::string& id) const;

  /// Marks a solve as active; false if one already is.
  bool begin_solve(const std::string& run);
  void end_solve(const std::string& run);
  bool solving(const std::string& run) const;

  /// Serialises mutations of one run.
  std::mutex& run_mutex(const std::string& run);

 private:
  void append_override_entry(const std::string& run, nlohmann::json entry);

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::set<std::string> active_;
  std::map<std::string, std::unique_ptr<std::mutex>> run_mutexes_;
};

/// Ids are limited to [A-Za-z0-9._-] and must not start with '.'.
bool valid_id(const std::string& id);

}  // namespace regionflow
