// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/api_router.hpp"

#include <charconv>

#include "regionflow/error.hpp"
#include "regionflow/pipeline.hpp"

namespace regionflow {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::invalid_input:
    case ErrorCode::empty_dataset: return 422;
    case ErrorCode::conflict: return 409;
    default: return 500;
  }
}

namespace {

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

ApiResponse route_not_found(const std::string& path) {
  return error_response(404, "not_found", "no such resource: " + path);
}

ApiResponse method_not_allowed(const std::string& method) {
  return error_response(405, "method_not_allowed", "method not allowed: " + method);
}

std::string percent_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
      if (ec == std::errc() && p == s.data() + i + 3) {
        out.push_back(static_cast<char>(v));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i] == '+' ? ' ' : s[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find(sep, start);
    out.push_back(s.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(ErrorCode::not_found, "bad " + what + ": " + s);
  return v;
}

int query_int(const std::map<std::string, std::string>& q, const std::string& key, int fallback) {
  auto it = q.find(key);
  if (it == q.end()) return fallback;
  int v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size()) {
    fail(ErrorCode::invalid_input, "query parameter " + key + " must be an integer");
  }
  return v;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("request body is not valid JSON");
  return j;
}

json run_summary(const RunManifest& m) {
  return {{"id", m.id},
          {"dataset", m.dataset},
          {"state", to_string(m.state)},
          {"frames_done", m.frames.size()},
          {"n_frames", m.n_frames}};
}

void require_frame(const RunManifest& m, int t) {
  for (const auto& f : m.frames) {
    if (f.t == t) return;
  }
  fail(ErrorCode::not_found, "run " + m.id + " has no frame " + std::to_string(t));
}

}  // namespace

ApiRouter::ApiRouter(RunStore& store, Config defaults) : store_(store), defaults_(std::move(defaults)) {}

ApiRouter::~ApiRouter() { wait_for_solves(); }

void ApiRouter::wait_for_solves() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

ApiResponse ApiRouter::handle(const std::string& method, const std::string& target, const std::string& body) {
  const std::size_t qpos = target.find('?');
  const std::string path = target.substr(0, qpos);
  Query q;
  if (qpos != std::string::npos) {
    for (const auto& kv : split(target.substr(qpos + 1), '&')) {
      if (kv.empty()) continue;
      const std::size_t eq = kv.find('=');
      q[percent_decode(kv.substr(0, eq))] = eq == std::string::npos ? "" : percent_decode(kv.substr(eq + 1));
    }
  }
  std::vector<std::string> parts;
  for (const auto& p : split(path, '/')) {
    if (!p.empty()) parts.push_back(percent_decode(p));
  }
  if (parts.empty() || parts[0] != "api") return route_not_found(path);
  parts.erase(parts.begin());
  try {
    ApiResponse r = dispatch(method, parts, q, body);
    if (r.status == 404 && r.body.is_null()) return route_not_found(path);
    return r;
  } catch (const Error& e) {
    return error_response(http_status(e.code()), to_string(e.code()), e.what());
  } catch (const std::invalid_argument& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const json::exception& e) {
    return error_response(422, "invalid_input", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

ApiResponse ApiRouter::dispatch(const std::string& method, const std::vector<std::string>& parts, const Query& q,
                                const std::string& body) {
  const std::size_t n = parts.size();
  const ApiResponse none{404, nullptr};
  if (n == 0) return none;

  if (parts[0] == "datasets") {
    if (n == 1) {
      if (method != "GET") return method_not_allowed(method);
      json list = json::array();
      for (const auto& id : store_.list_datasets()) {
        if (!store_.has_dataset(id)) continue;
        const DatasetInfo info = store_.dataset_info(id);
        list.push_back({{"id", id},
                        {"grids", info.grid.size()},
                        {"n_frames", info.binning.n_bins},
                        {"usable_trips", info.report.usable}});
      }
      return {200, {{"datasets", list}}};
    }
    const std::string& id = parts[1];
    if (!store_.has_dataset(id)) fail(ErrorCode::not_found, "unknown dataset: " + id);
    if (n == 2) {
      if (method != "GET") return method_not_allowed(method);
      return {200, json::parse(read_file(store_.dataset_dir(id) / "dataset.json"))};
    }
    if (n == 3 && parts[2] == "runs") {
      if (method == "POST") return start_run(id, body);
      if (method != "GET") return method_not_allowed(method);
      json list = json::array();
      for (const auto& r : store_.list_runs()) {
        if (!store_.has_run(r)) continue;
        const RunManifest m = store_.read_manifest(r);
        if (m.dataset == id) list.push_back(run_summary(m));
      }
      return {200, {{"runs", list}}};
    }
    return none;
  }

  if (parts[0] != "runs") return none;
  if (n == 1) {
    if (method != "GET") return method_not_allowed(method);
    json list = json::array();
    for (const auto& r : store_.list_runs()) {
      if (store_.has_run(r)) list.push_back(run_summary(store_.read_manifest(r)));
    }
    return {200, {{"runs", list}}};
  }
  const std::string& run = parts[1];
  const RunManifest m = store_.read_manifest(run);
  if (n == 2) {
    if (method != "GET") return method_not_allowed(method);
    return {200, to_json(m)};
  }
  const std::string& what = parts[2];
  if (what == "overview" && n == 3) {
    if (method != "GET") return method_not_allowed(method);
    if (m.state != RunState::done) fail(ErrorCode::not_found, "run " + run + " has no overview yet");
    return {200, store_.read_json(run, "overview.json")};
  }
  if (what == "evolution" && n == 3) {
    if (method != "GET") return method_not_allowed(method);
    const int min_width = query_int(q, "min_width", run_params_from_json(m.params).min_width);
    if (min_width < 1) fail(ErrorCode::invalid_input, "min_width must be >= 1");
    return {200, to_json(effective_run(store_, run).evolution, min_width)};
  }
  if (what == "snapshots") {
    if (n == 3 && method == "GET") {
      json list = json::array();
      for (const auto& s : store_.list_snapshots(run)) {
        list.push_back({{"id", s.id}, {"t", s.t}, {"created_at", s.created_at}, {"note", s.note}});
      }
      return {200, {{"snapshots", list}}};
    }
    if (n == 3 && method == "POST") {
      if (store_.solving(run)) fail(ErrorCode::conflict, "run " + run + " is being solved");
      const json req = parse_body(body);
      if (!req.is_object() || !req.contains("t") || !req.at("t").is_number_integer()) {
        fail(ErrorCode::invalid_input, "snapshot body needs an integer t");
      }
      const int t = req.at("t").get<int>();
      require_frame(m, t);
      const SegmentationFrame seg = effective_frame(store_, run, t);
      const DatasetInfo info = store_.dataset_info(m.dataset);
      const Snapshot s = store_.add_snapshot(run, t, req.value("note", std::string()),
                                             segmentation_geojson(seg, info.grid), index_json(seg));
      return {201, to_json(s)};
    }
    if (n == 4 && method == "GET") return {200, to_json(store_.read_snapshot(run, parts[3]))};
    if (n <= 4) return method_not_allowed(method);
    return none;
  }
  if (what == "frames" && n >= 5) {
    if (method != "GET" && store_.solving(run)) fail(ErrorCode::conflict, "run " + run + " is being solved");
    const int t = parse_int(parts[3], "frame");
    require_frame(m, t);
    return frame_route(method, run, t, {parts.begin() + 4, parts.end()}, q, body);
  }
  return none;
}

ApiResponse ApiRouter::frame_route(const std::string& method, const std::string& run, int t,
                                   const std::vector<std::string>& rest, const Query& q,
                                   const std::string& body) {
  const ApiResponse none{404, nullptr};
  const std::string& what = rest[0];
  if (what == "overrides" && rest.size() == 1) {
    if (method == "GET") {
      json pins = json::object();
      for (const auto& [g, p] : store_.overrides(run, t)) pins[std::to_string(g)] = p;
      return {200, {{"t", t}, {"overrides", pins}}};
    }
    if (method == "POST") return post_overrides(run, t, body);
    if (method == "DELETE") return delete_overrides(run, t, q);
    return method_not_allowed(method);
  }
  if (method != "GET") return method_not_allowed(method);
  const RunManifest m = store_.read_manifest(run);
  if (what == "segmentation" && rest.size() == 1) {
    const DatasetInfo info = store_.dataset_info(m.dataset);
    return {200, segmentation_geojson(effective_frame(store_, run, t), info.grid)};
  }
  if (what == "index" && rest.size() == 1) return {200, index_json(effective_frame(store_, run, t))};
  if (what == "patterns" && rest.size() == 1) {
    const SegmentationFrame seg = effective_frame(store_, run, t);
    const FactorizationFrame f = store_.read_frame(run, t);
    const FeatureMatrix x = read_feature_matrix(store_.dataset_dir(m.dataset), t);
    json cards = json::array();
    for (const auto& r : seg.regions) cards.push_back(to_json(region_pattern_card(r, f.W, x)));
    const Matrix c = pattern_correlation(f.W);
    json corr = json::array();
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < c.cols(); ++j) row.push_back(c(i, j));
      corr.push_back(row);
    }
    return {200, {{"t", t}, {"k", f.k}, {"grids", x.grids()}, {"cards", cards}, {"correlation", corr}}};
  }
  if (what == "grids" && rest.size() == 2) {
    const FeatureMatrix x = read_feature_matrix(store_.dataset_dir(m.dataset), t);
    const int g = parse_int(rest[1], "grid");
    if (g < 0 || g >= x.grids()) fail(ErrorCode::not_found, "no grid " + rest[1]);
    const SegmentationFrame seg = effective_frame(store_, run, t);
    const FactorizationFrame f = store_.read_frame(run, t);
    json j = to_json(grid_detail(g, x));
    j["t"] = t;
    j["primary"] = seg.primary[static_cast<std::size_t>(g)];
    j["region"] = seg.region_of[static_cast<std::size_t>(g)];
    j["h"] = std::vector<double>(f.H.row(g).begin(), f.H.row(g).end());
    j["overridden"] = seg.overrides.contains(g);
    return {200, j};
  }
  if (what == "flows" && rest.size() == 1) {
    const DatasetInfo info = store_.dataset_info(m.dataset);
    const auto hists = read_flow_histograms(store_.dataset_dir(m.dataset), info, t);
    json list = json::array();
    if (q.contains("grid")) {
      const int g = query_int(q, "grid", -1);
      if (g < 0 || g >= info.grid.size()) fail(ErrorCode::not_found, "no grid " + q.at("grid"));
      list.push_back(to_json(hists[static_cast<std::size_t>(g)]));
    } else {
      for (const auto& h : hists) list.push_back(to_json(h));
    }
    return {200, {{"t", t}, {"bins", kDirectionBins}, {"histograms", list}}};
  }
  if (what == "layout" && rest.size() == 1) {
    const FactorizationFrame f = store_.read_frame(run, t);
    if (f.k < 2) fail(ErrorCode::invalid_input, "barycentric layout needs K >= 2");
    const SegmentationFrame seg = effective_frame(store_, run, t);
    return {200, to_json(barycentric_layout(f.H), &seg)};
  }
  return none;
}

ApiResponse ApiRouter::start_run(const std::string& dataset, const std::string& body) {
  const json req = parse_body(body);
  if (!req.is_object()) fail(ErrorCode::invalid_input, "run request must be a JSON object");
  const Config cfg = run_params_from_json(req.value("params", json::object()), defaults_);
  const std::string run = req.contains("run") ? req.at("run").get<std::string>() : default_run_id(dataset, cfg);
  if (!valid_id(run)) fail(ErrorCode::invalid_input, "invalid run id: " + run);
  claim_run(store_, dataset, cfg, run, req.value("overwrite", false));
  std::lock_guard lock(mu_);
  workers_.emplace_back([this, dataset, cfg, run] {
    try {
      solve_claimed_run(store_, dataset, cfg, run);
    } catch (const std::exception&) {
      // The failure is recorded in the run manifest.
    }
  });
  return {202, to_json(store_.read_manifest(run))};
}

ApiResponse ApiRouter::override_result(const std::string& run, int t, const std::vector<int>& before) {
  const EffectiveRun eff = effective_run(store_, run);
  const RunManifest m = store_.read_manifest(run);
  const DatasetInfo info = store_.dataset_info(m.dataset);
  const SegmentationFrame* seg = nullptr;
  for (const auto& f : eff.frames) {
    if (f.t == t) seg = &f;
  }
  if (!seg) fail(ErrorCode::internal, "frame vanished");
  json changed = json::array();
  for (std::size_t g = 0; g < before.size(); ++g) {
    if (before[g] != seg->primary[g]) changed.push_back(g);
  }
  const json ev = to_json(eff.evolution, 1);
  json links = json::array();
  for (const auto& l : ev.at("links")) {
    const int lt = l.at("t").get<int>();
    if (lt == t || lt == t + 1) links.push_back(l);
  }
  json pins = json::object();
  for (const auto& [g, p] : seg->overrides) pins[std::to_string(g)] = p;
  return {200,
          {{"t", t},
           {"overrides", pins},
           {"changed_grids", changed},
           {"segmentation", segmentation_geojson(*seg, info.grid)},
           {"index", index_json(*seg)},
           {"links", links},
           {"evolution", ev}}};
}

ApiResponse ApiRouter::post_overrides(const std::string& run, int t, const std::string& body) {
  if (store_.solving(run)) fail(ErrorCode::conflict, "run " + run + " is being solved");
  const json req = parse_body(body);
  if (!req.is_object() || req.empty()) fail(ErrorCode::invalid_input, "override body must map grid to pattern");
  Overrides pins;
  for (const auto& [key, val] : req.items()) {
    int g = 0;
    auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), g);
    if (ec != std::errc() || p != key.data() + key.size()) fail(ErrorCode::invalid_input, "bad grid index: " + key);
    if (!val.is_number_integer()) fail(ErrorCode::invalid_input, "pattern for grid " + key + " must be an integer");
    pins[g] = val.get<int>();
  }
  const RunManifest m = store_.read_manifest(run);
  const SegmentationFrame before = effective_frame(store_, run, t);
  // Validate against the solved factors before anything is logged.
  Overrides merged = store_.overrides(run, t);
  for (const auto& [g, p] : pins) merged[g] = p;
  const FeatureMatrix x = read_feature_matrix(store_.dataset_dir(m.dataset), t);
  const Matrix h = read_matrix(store_.frame_dir(run, t) / "H");
  segment(h, x, store_.dataset_info(m.dataset).grid, merged);
  store_.set_overrides(run, t, pins);
  return override_result(run, t, before.primary);
}

ApiResponse ApiRouter::delete_overrides(const std::string& run, int t, const Query& q) {
  if (store_.solving(run)) fail(ErrorCode::conflict, "run " + run + " is being solved");
  const SegmentationFrame before = effective_frame(store_, run, t);
  std::vector<GridIndex> grids;
  if (q.contains("grid")) grids.push_back(query_int(q, "grid", -1));
  store_.clear_overrides(run, t, grids);
  return override_result(run, t, before.primary);
}

}  // namespace regionflow
