// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "regionflow/config.hpp"
#include "regionflow/evolution.hpp"
#include "regionflow/run_store.hpp"

namespace regionflow {

/// Reads a trip CSV, bins it per `cfg` and writes dataset `id`. Needs
/// cfg.grid. Throws conflict if the dataset exists and !overwrite.
DatasetInfo ingest_csv(RunStore& store, const std::filesystem::path& csv, const Config& cfg,
                       const std::string& id, bool overwrite = false);

using FrameCallback = std::function<void(const FrameSummary&)>;

/// Chooses K, solves all frames, segments them and writes the run with its
/// evolution graph and overview. Frames are persisted as they finish; on a
/// numerical failure the run is marked failed at that frame and the error
/// is rethrown. Throws conflict if the run exists and !overwrite or a solve
/// of it is active.
RunManifest solve_run(RunStore& store, const std::string& dataset, const Config& cfg,
                      const std::string& run, bool overwrite = false,
                      const FrameCallback& on_frame = {});

/// Claims the run for solving and writes a pending manifest; solve_run
/// with `claimed` then skips those steps. Used for background solves.
void claim_run(RunStore& store, const std::string& dataset, const Config& cfg,
               const std::string& run, bool overwrite);
RunManifest solve_claimed_run(RunStore& store, const std::string& dataset, const Config& cfg,
                              const std::string& run, const FrameCallback& on_frame = {});

/// Default run id: "<dataset>-<hash of run parameters>".
std::string default_run_id(const std::string& dataset, const Config& cfg);

/// Segmentations and evolution graph of a finished run with its overrides
/// applied; region colors are filled in.
struct EffectiveRun {
  std::vector<SegmentationFrame> frames;
  EvolutionGraph evolution;
};

EffectiveRun effective_run(const RunStore& store, const std::string& run);

/// Frame t with overrides applied; colors come from the effective evolution.
SegmentationFrame effective_frame(const RunStore& store, const std::string& run, int t);

/// Writes segmentation_<tttt>.geojson per frame, evolution.json and
/// overview.json (overrides applied) into `out_dir`. `what` is "geojson",
/// "evolution" or "all". Returns the files written.
std::vector<std::filesystem::path> export_run(const RunStore& store, const std::string& run,
                                              const std::filesystem::path& out_dir,
                                              const std::string& what = "all");

}  // namespace regionflow
