// Licensed under the Apache License 2.0 (see LICENSE file).

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "regionflow/regionflow.h"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int report_failure(const char* what) {
  std::cerr << "regionflow " << what << ": " << rf_last_error() << "\n";
  return 1;
}

// Owns strings returned by the library.
struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { rf_free_string(p); }
  std::string str() const { return p ? p : ""; }
};

struct Store {
  rf_store* s = nullptr;
  ~Store() { rf_store_close(s); }
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void print_frame(const char* frame_json, void*) {
  const auto j = nlohmann::json::parse(frame_json);
  std::printf("frame %4d  K=%-2d  objective=%.6g  ortho_residual=%.3g  iterations=%d%s\n", j["t"].get<int>(),
              j["k"].get<int>(), j["objective"].get<double>(), j["ortho_residual"].get<double>(),
              j["iterations"].get<int>(), j["converged"].get<bool>() ? "" : "  (not converged)");
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-region analysis of gridded trip data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rf_version());

  std::string data_dir = "data";
  std::string config;
  bool overwrite = false;

  auto* ingest = app.add_subcommand("ingest", "Bin a trip CSV into a dataset");
  std::string csv, dataset_id;
  ingest->add_option("csv", csv, "Trip CSV file")->required();
  ingest->add_option("--data", data_dir, "Data directory")->capture_default_str();
  ingest->add_option("--config", config, "INI config with [grid] and [binning]")->required();
  ingest->add_option("--id", dataset_id, "Dataset id")->required();
  ingest->add_flag("--overwrite", overwrite, "Replace an existing dataset");

  auto* solve = app.add_subcommand("solve", "Factorize every frame of a dataset");
  std::string run_id;
  solve->add_option("dataset", dataset_id, "Dataset id")->required();
  solve->add_option("--data", data_dir, "Data directory")->capture_default_str();
  solve->add_option("--config", config, "INI config with [solver], [overview], [evolution]");
  solve->add_option("--run", run_id, "Run id (default: dataset id plus parameter hash)");
  solve->add_flag("--overwrite", overwrite, "Replace an existing run");

  auto* exp = app.add_subcommand("export", "Write GeoJSON segmentations and the evolution graph");
  std::string out_dir, format = "all";
  exp->add_option("run", run_id, "Run id")->required();
  exp->add_option("--data", data_dir, "Data directory")->capture_default_str();
  exp->add_option("--out", out_dir, "Output directory")->required();
  exp->add_option("--format", format, "geojson, evolution or all")
      ->check(CLI::IsMember({"geojson", "evolution", "all"}))
      ->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  serve->add_option("--data", data_dir, "Data directory")->capture_default_str();
  serve->add_option("--config", config, "Defaults for runs started over HTTP");
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port (0 picks one)")->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served at /");

  CLI11_PARSE(app, argc, argv);

  Store store;
  const bool config_at_open = serve->parsed();
  if (rf_store_open(data_dir.c_str(), config_at_open ? opt(config) : nullptr, &store.s) != RF_OK) {
    return report_failure("open");
  }

  if (ingest->parsed()) {
    OwnedString out;
    if (rf_ingest_csv(store.s, csv.c_str(), dataset_id.c_str(), config.c_str(), overwrite, &out.p) != RF_OK) {
      return report_failure("ingest");
    }
    const auto j = nlohmann::json::parse(out.str());
    const auto& r = j["report"];
    std::cout << "dataset " << dataset_id << ": " << j["grid"]["n_grids"].get<int>() << " grids, "
              << j["binning"]["n_bins"].get<int>() << " bins\n"
              << "rows read: " << r["rows_read"] << "\n"
              << "trips used: " << r["usable"] << "\n"
              << "rows skipped: " << r["skipped"] << "\n";
    for (const auto& [reason, count] : r["skipped_by_reason"].items()) {
      std::cout << "  " << reason << ": " << count << "\n";
    }
    return 0;
  }

  if (solve->parsed()) {
    OwnedString out;
    if (rf_solve(store.s, dataset_id.c_str(), opt(run_id), opt(config), overwrite, print_frame, nullptr, &out.p) !=
        RF_OK) {
      return report_failure("solve");
    }
    const auto j = nlohmann::json::parse(out.str());
    std::cout << "run " << j["id"].get<std::string>() << ": " << j["frames"].size() << " frames, "
              << j["status"]["state"].get<std::string>() << "\n";
    return 0;
  }

  if (exp->parsed()) {
    OwnedString out;
    if (rf_export(store.s, run_id.c_str(), out_dir.c_str(), format.c_str(), &out.p) != RF_OK) {
      return report_failure("export");
    }
    for (const auto& f : nlohmann::json::parse(out.str())) std::cout << f.get<std::string>() << "\n";
    return 0;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      if (g_interrupted) {
        rf_stop(store.s);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });
  auto ready = [](int bound, void*) {
    std::cout << "listening on port " << bound << std::endl;
  };
  const rf_status st = rf_serve(store.s, host.c_str(), port, opt(static_dir), ready, nullptr);
  done = true;
  watcher.join();
  return st == RF_OK ? 0 : report_failure("serve");
}
