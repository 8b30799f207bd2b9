// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "regionflow/csv_reader.hpp"
#include "regionflow/error.hpp"
#include "regionflow/overview.hpp"

namespace regionflow {

namespace fs = std::filesystem;

DatasetInfo ingest_csv(RunStore& store, const fs::path& csv, const Config& cfg, const std::string& id,
                       bool overwrite) {
  if (!cfg.grid) fail(ErrorCode::invalid_input, "config has no [grid] section");
  if (!valid_id(id)) fail(ErrorCode::invalid_input, "invalid dataset id: " + id);
  if (store.has_dataset(id) && !overwrite) fail(ErrorCode::conflict, "dataset already exists: " + id);
  CsvTrips parsed = read_trips_csv(csv);
  std::int64_t first = 0, last = 0;
  bool any = false;
  for (const auto& trip : parsed.trips) {
    if (!trip.valid()) continue;
    first = any ? std::min(first, trip.pickup_time) : trip.pickup_time;
    last = any ? std::max(last, trip.pickup_time) : trip.pickup_time;
    any = true;
  }
  if (!any) fail(ErrorCode::empty_dataset, "no usable trips in " + csv.string());
  const TimeBinning bins = cfg.binning.resolve(first, last);
  const Dataset ds = make_dataset(id, parsed.trips, *cfg.grid, bins, std::move(parsed.report));
  const fs::path dir = store.dataset_dir(id);
  if (fs::exists(dir)) fs::remove_all(dir);
  write_dataset(dir, ds);
  return ds.info;
}

std::string default_run_id(const std::string& dataset, const Config& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : run_params_json(cfg).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char tag[16];
  std::snprintf(tag, sizeof tag, "%08x", static_cast<unsigned>(static_cast<std::uint32_t>(h ^ (h >> 32))));
  return dataset + "-" + tag;
}

namespace {

FrameSummary summarize(const FactorizationFrame& f) {
  return {f.t, f.k, f.terms.objective(), f.terms.penalized(), f.ortho_residual, f.iterations, f.converged};
}

void materialize(RunStore& store, const std::string& run, const DatasetInfo& info,
                 const std::vector<FeatureMatrix>& xs, const std::vector<Matrix>& hs, const Config& cfg) {
  std::vector<SegmentationFrame> segs;
  for (std::size_t t = 0; t < xs.size(); ++t) segs.push_back(segment(hs[t], xs[t], info.grid));
  EvolutionGraph ev = build_evolution(segs);
  apply_colors(segs, ev);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const fs::path rel = fs::path("frames") / frame_tag(segs[t].t);
    store.write_json(run, rel / "segmentation.json", index_json(segs[t]));
    store.write_json(run, rel / "segmentation.geojson", segmentation_geojson(segs[t], info.grid));
    if (hs[t].cols() >= 2) {
      store.write_json(run, rel / "layout.json", to_json(barycentric_layout(hs[t]), &segs[t]));
    }
  }
  store.write_json(run, "evolution.json", to_json(ev, 1));
  store.write_json(run, "overview.json", to_json(overview_points(xs, info.binning, cfg.dayparts)));
}

}  // namespace

void claim_run(RunStore& store, const std::string& dataset, const Config& cfg, const std::string& run,
               bool overwrite) {
  cfg.validate();
  const DatasetInfo info = store.dataset_info(dataset);
  const fs::path dir = store.run_dir(run);
  if (!store.begin_solve(run)) fail(ErrorCode::conflict, "a solve of run " + run + " is in progress");
  try {
    if (store.has_run(run) && !overwrite) fail(ErrorCode::conflict, "run already exists: " + run);
    if (fs::exists(dir)) fs::remove_all(dir);
    RunManifest m;
    m.id = run;
    m.dataset = dataset;
    m.params = run_params_json(cfg);
    m.n_frames = info.binning.n_bins;
    store.write_manifest(m);
  } catch (...) {
    store.end_solve(run);
    throw;
  }
}

RunManifest solve_claimed_run(RunStore& store, const std::string& dataset, const Config& cfg,
                              const std::string& run, const FrameCallback& on_frame) {
  struct Release {
    RunStore& s;
    const std::string& r;
    ~Release() { s.end_solve(r); }
  } release{store, run};

  RunManifest m = store.read_manifest(run);
  try {
    const DatasetInfo info = store.dataset_info(dataset);
    const fs::path ddir = store.dataset_dir(dataset);
    const std::vector<FeatureMatrix> xs = read_feature_series(ddir);
    const AdjacencyGraph graph = build_adjacency(info.grid);
    std::vector<int> ks;
    for (const auto& x : xs) {
      int k = cfg.fixed_k;
      if (k <= 0) k = choose_k(FeatureMatrix{x.t, preprocess(x.data, cfg.solver)}, cfg.bandwidth, cfg.solver.k_max);
      ks.push_back(k);
    }
    m.state = RunState::solving;
    store.write_manifest(m);

    std::vector<Matrix> hs;
    SolveOptions opts;
    opts.on_frame = [&](int i) {
      m.frame = xs[static_cast<std::size_t>(i)].t;
      store.write_manifest(m);
    };
    opts.on_frame_solved = [&](const FactorizationFrame& f) {
      store.write_frame(run, f);
      hs.push_back(f.H);
      m.frames.push_back(summarize(f));
      store.write_manifest(m);
      if (on_frame) on_frame(m.frames.back());
    };
    solve_series(xs, graph, cfg.solver, std::span<const int>(ks), opts);
    materialize(store, run, info, xs, hs, cfg);
    m.state = RunState::done;
    m.frame = -1;
    m.message.clear();
    store.write_manifest(m);
    return m;
  } catch (const std::exception& e) {
    m.state = RunState::failed;
    m.message = e.what();
    store.write_manifest(m);
    throw;
  }
}

RunManifest solve_run(RunStore& store, const std::string& dataset, const Config& cfg, const std::string& run,
                      bool overwrite, const FrameCallback& on_frame) {
  claim_run(store, dataset, cfg, run, overwrite);
  return solve_claimed_run(store, dataset, cfg, run, on_frame);
}

namespace {

RunManifest finished_manifest(const RunStore& store, const std::string& run) {
  RunManifest m = store.read_manifest(run);
  if (m.state == RunState::solving || m.state == RunState::pending) {
    fail(ErrorCode::conflict, "run " + run + " is still being solved");
  }
  if (m.state == RunState::failed) {
    fail(ErrorCode::not_found, "run " + run + " failed at frame " + std::to_string(m.frame) + ": " + m.message);
  }
  return m;
}

SegmentationFrame stored_frame(const RunStore& store, const std::string& run, int t) {
  return segmentation_from_index(store.read_json(run, fs::path("frames") / frame_tag(t) / "segmentation.json"));
}

}  // namespace

EffectiveRun effective_run(const RunStore& store, const std::string& run) {
  const RunManifest m = finished_manifest(store, run);
  const auto pins = store.overrides(run);
  EffectiveRun out;
  std::optional<DatasetInfo> info;
  for (const auto& f : m.frames) {
    auto it = pins.find(f.t);
    if (it == pins.end()) {
      out.frames.push_back(stored_frame(store, run, f.t));
      continue;
    }
    if (!info) info = store.dataset_info(m.dataset);
    const FeatureMatrix x = read_feature_matrix(store.dataset_dir(m.dataset), f.t);
    const Matrix h = read_matrix(store.frame_dir(run, f.t) / "H");
    out.frames.push_back(segment(h, x, info->grid, it->second));
  }
  if (pins.empty()) {
    out.evolution = evolution_from_json(store.read_json(run, "evolution.json"));
  } else {
    out.evolution = build_evolution(out.frames);
  }
  apply_colors(out.frames, out.evolution);
  return out;
}

SegmentationFrame effective_frame(const RunStore& store, const std::string& run, int t) {
  const RunManifest m = finished_manifest(store, run);
  const bool known = std::any_of(m.frames.begin(), m.frames.end(), [&](const auto& f) { return f.t == t; });
  if (!known) fail(ErrorCode::not_found, "run " + run + " has no frame " + std::to_string(t));
  if (store.overrides(run).empty()) return stored_frame(store, run, t);
  for (auto& f : effective_run(store, run).frames) {
    if (f.t == t) return f;
  }
  fail(ErrorCode::internal, "frame vanished from run " + run);
}

std::vector<fs::path> export_run(const RunStore& store, const std::string& run, const fs::path& out_dir,
                                 const std::string& what) {
  if (what != "geojson" && what != "evolution" && what != "all") {
    fail(ErrorCode::invalid_input, "export format must be geojson, evolution or all");
  }
  const RunManifest m = finished_manifest(store, run);
  const Config cfg = run_params_from_json(m.params);
  const EffectiveRun eff = effective_run(store, run);
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  if (what != "evolution") {
    const DatasetInfo info = store.dataset_info(m.dataset);
    for (const auto& f : eff.frames) {
      const fs::path p = out_dir / ("segmentation_" + frame_tag(f.t) + ".geojson");
      write_file_atomic(p, segmentation_geojson(f, info.grid).dump(2) + "\n");
      written.push_back(p);
    }
  }
  if (what != "geojson") {
    const fs::path p = out_dir / "evolution.json";
    write_file_atomic(p, to_json(eff.evolution, cfg.min_width).dump(2) + "\n");
    written.push_back(p);
    const fs::path o = out_dir / "overview.json";
    write_file_atomic(o, store.read_json(run, "overview.json").dump(2) + "\n");
    written.push_back(o);
  }
  return written;
}

}  // namespace regionflow
