// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "regionflow/error.hpp"

namespace regionflow {

namespace fs = std::filesystem;

std::string to_string(RunState s) {
  switch (s) {
    case RunState::pending: return "pending";
    case RunState::solving: return "solving";
    case RunState::done: return "done";
    case RunState::failed: return "failed";
  }
  return "pending";
}

RunState run_state_from_string(const std::string& s) {
  if (s == "pending") return RunState::pending;
  if (s == "solving") return RunState::solving;
  if (s == "done") return RunState::done;
  if (s == "failed") return RunState::failed;
  fail(ErrorCode::invalid_input, "unknown run state: " + s);
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : m.frames) {
    frames.push_back({{"t", f.t},
                      {"k", f.k},
                      {"objective", f.objective},
                      {"penalized", f.penalized},
                      {"ortho_residual", f.ortho_residual},
                      {"iterations", f.iterations},
                      {"converged", f.converged}});
  }
  return {{"id", m.id},
          {"dataset", m.dataset},
          {"params", m.params},
          {"status", {{"state", to_string(m.state)}, {"frame", m.frame}, {"message", m.message}}},
          {"n_frames", m.n_frames},
          {"frames", frames}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.id = j.at("id").get<std::string>();
  m.dataset = j.at("dataset").get<std::string>();
  m.params = j.at("params");
  const auto& st = j.at("status");
  m.state = run_state_from_string(st.at("state").get<std::string>());
  m.frame = st.at("frame").get<int>();
  m.message = st.at("message").get<std::string>();
  m.n_frames = j.at("n_frames").get<int>();
  for (const auto& f : j.at("frames")) {
    m.frames.push_back({f.at("t").get<int>(), f.at("k").get<int>(), f.at("objective").get<double>(),
                        f.at("penalized").get<double>(), f.at("ortho_residual").get<double>(),
                        f.at("iterations").get<int>(), f.at("converged").get<bool>()});
  }
  return m;
}

nlohmann::json to_json(const Snapshot& s) {
  return {{"id", s.id},
          {"run", s.run},
          {"t", s.t},
          {"created_at", s.created_at},
          {"note", s.note},
          {"segmentation", s.segmentation},
          {"index", s.index}};
}

namespace {

Snapshot snapshot_from_json(const nlohmann::json& j) {
  return {j.at("id").get<std::string>(),   j.at("run").get<std::string>(),
          j.at("t").get<int>(),            j.at("created_at").get<std::string>(),
          j.at("note").get<std::string>(), j.at("segmentation"),
          j.at("index")};
}

nlohmann::json parse_file(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::io_error, "corrupt JSON in " + p.string() + ": " + e.what());
  }
}

std::vector<std::string> subdirs(const fs::path& p) {
  std::vector<std::string> out;
  if (!fs::exists(p)) return out;
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_directory() && valid_id(e.path().filename().string())) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json terms_json(const TermValues& t) {
  return {{"reconstruction", t.reconstruction}, {"temporal_w", t.temporal_w}, {"temporal_h", t.temporal_h},
          {"spatial", t.spatial},               {"ortho_penalty", t.ortho_penalty}};
}

nlohmann::json weights_json(const Weights& w) {
  return {{"alpha", w.alpha}, {"beta", w.beta}, {"lambda", w.lambda}, {"ortho", w.ortho},
          {"unit_norm", w.unit_norm}};
}

}  // namespace

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "datasets", ec);
  fs::create_directories(root_ / "runs", ec);
  if (ec) fail(ErrorCode::io_error, "cannot create store at " + root_.string() + ": " + ec.message());
}

fs::path RunStore::dataset_dir(const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::invalid_input, "invalid dataset id: " + id);
  return root_ / "datasets" / id;
}

fs::path RunStore::run_dir(const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::invalid_input, "invalid run id: " + id);
  return root_ / "runs" / id;
}

fs::path RunStore::frame_dir(const std::string& run, int t) const {
  return run_dir(run) / "frames" / frame_tag(t);
}

std::vector<std::string> RunStore::list_datasets() const { return subdirs(root_ / "datasets"); }
std::vector<std::string> RunStore::list_runs() const { return subdirs(root_ / "runs"); }

bool RunStore::has_dataset(const std::string& id) const {
  return valid_id(id) && fs::exists(dataset_dir(id) / "dataset.json");
}

bool RunStore::has_run(const std::string& id) const {
  return valid_id(id) && fs::exists(run_dir(id) / "run.json");
}

DatasetInfo RunStore::dataset_info(const std::string& id) const {
  if (!has_dataset(id)) fail(ErrorCode::not_found, "unknown dataset: " + id);
  return read_dataset_info(dataset_dir(id));
}

RunManifest RunStore::read_manifest(const std::string& run) const {
  if (!has_run(run)) fail(ErrorCode::not_found, "unknown run: " + run);
  return manifest_from_json(parse_file(run_dir(run) / "run.json"));
}

void RunStore::write_manifest(const RunManifest& m) {
  fs::create_directories(run_dir(m.id));
  write_file_atomic(run_dir(m.id) / "run.json", to_json(m).dump(2) + "\n");
}

void RunStore::write_frame(const std::string& run, const FactorizationFrame& f) {
  const fs::path dir = frame_dir(run, f.t);
  fs::create_directories(dir);
  write_matrix(dir / "W", f.W);
  write_matrix(dir / "H", f.H);
  if (f.M) write_matrix(dir / "M", *f.M);
  nlohmann::json j = {{"t", f.t},
                      {"k", f.k},
                      {"has_m", f.M.has_value()},
                      {"objective_trace", f.objective_trace},
                      {"terms", terms_json(f.terms)},
                      {"weights", weights_json(f.weights)},
                      {"ortho_residual", f.ortho_residual},
                      {"iterations", f.iterations},
                      {"converged", f.converged},
                      {"zero_grids", f.zero_grids}};
  // Reported only; M is not normalised.
  if (f.M) {
    const Vector sums = f.M->rowwise().sum();
    j["m_row_sums"] = std::vector<double>(sums.begin(), sums.end());
  }
  write_file_atomic(dir / "frame.json", j.dump(2) + "\n");
}

FactorizationFrame RunStore::read_frame(const std::string& run, int t) const {
  const fs::path dir = frame_dir(run, t);
  if (!fs::exists(dir / "frame.json")) fail(ErrorCode::not_found, "frame " + std::to_string(t) + " not solved");
  const nlohmann::json j = parse_file(dir / "frame.json");
  FactorizationFrame f;
  f.t = j.at("t").get<int>();
  f.k = j.at("k").get<int>();
  f.W = read_matrix(dir / "W");
  f.H = read_matrix(dir / "H");
  if (j.at("has_m").get<bool>()) f.M = read_matrix(dir / "M");
  f.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  const auto& tv = j.at("terms");
  f.terms = {tv.at("reconstruction").get<double>(), tv.at("temporal_w").get<double>(),
             tv.at("temporal_h").get<double>(), tv.at("spatial").get<double>(),
             tv.at("ortho_penalty").get<double>()};
  const auto& wv = j.at("weights");
  f.weights = {wv.at("alpha").get<double>(), wv.at("beta").get<double>(), wv.at("lambda").get<double>(),
               wv.at("ortho").get<double>(), wv.at("unit_norm").get<double>()};
  f.ortho_residual = j.at("ortho_residual").get<double>();
  f.iterations = j.at("iterations").get<int>();
  f.converged = j.at("converged").get<bool>();
  f.zero_grids = j.at("zero_grids").get<std::vector<GridIndex>>();
  return f;
}

void RunStore::write_json(const std::string& run, const fs::path& rel, const nlohmann::json& j) {
  const fs::path p = run_dir(run) / rel;
  fs::create_directories(p.parent_path());
  write_file_atomic(p, j.dump(2) + "\n");
}

nlohmann::json RunStore::read_json(const std::string& run, const fs::path& rel) const {
  const fs::path p = run_dir(run) / rel;
  if (!fs::exists(p)) fail(ErrorCode::not_found, "missing run artifact: " + rel.generic_string());
  return parse_file(p);
}

nlohmann::json RunStore::override_log(const std::string& run) const {
  const fs::path p = run_dir(run) / "overrides.json";
  if (!fs::exists(p)) return {{"version", 1}, {"log", nlohmann::json::array()}};
  return parse_file(p);
}

std::map<int, Overrides> RunStore::overrides(const std::string& run) const {
  std::map<int, Overrides> out;
  const nlohmann::json log = override_log(run);
  for (const auto& e : log.at("log")) {
    const int t = e.at("t").get<int>();
    const std::string op = e.at("op").get<std::string>();
    auto& pins = out[t];
    if (op == "set") {
      for (const auto& [g, p] : e.at("grids").items()) pins[std::stoi(g)] = p.get<int>();
    } else if (e.at("grids").is_null()) {
      pins.clear();
    } else {
      for (const auto& g : e.at("grids")) pins.erase(g.get<int>());
    }
  }
  std::erase_if(out, [](const auto& kv) { return kv.second.empty(); });
  return out;
}

Overrides RunStore::overrides(const std::string& run, int t) const {
  auto all = overrides(run);
  auto it = all.find(t);
  return it == all.end() ? Overrides{} : it->second;
}

void RunStore::append_override_entry(const std::string& run, nlohmann::json entry) {
  std::lock_guard lock(run_mutex(run));
  nlohmann::json log = override_log(run);
  entry["seq"] = log.at("log").size() + 1;
  log["log"].push_back(std::move(entry));
  write_file_atomic(run_dir(run) / "overrides.json", log.dump(2) + "\n");
}

void RunStore::set_overrides(const std::string& run, int t, const Overrides& pins) {
  nlohmann::json grids = nlohmann::json::object();
  for (const auto& [g, p] : pins) grids[std::to_string(g)] = p;
  append_override_entry(run, {{"t", t}, {"op", "set"}, {"grids", grids}});
}

void RunStore::clear_overrides(const std::string& run, int t, const std::vector<GridIndex>& grids) {
  append_override_entry(run, {{"t", t}, {"op", "clear"},
                              {"grids", grids.empty() ? nlohmann::json(nullptr) : nlohmann::json(grids)}});
}

Snapshot RunStore::add_snapshot(const std::string& run, int t, const std::string& note,
                                const nlohmann::json& segmentation, const nlohmann::json& index) {
  std::lock_guard lock(run_mutex(run));
  const fs::path dir = run_dir(run) / "snapshots";
  fs::create_directories(dir);
  auto snap_id = [](int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap-%04d", n);
    return std::string(buf);
  };
  int n = 1;
  while (fs::exists(dir / (snap_id(n) + ".json"))) ++n;
  Snapshot s;
  s.id = snap_id(n);
  s.run = run;
  s.t = t;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  s.created_at = stamp;
  s.note = note;
  s.segmentation = segmentation;
  s.index = index;
  write_file_atomic(dir / (s.id + ".json"), to_json(s).dump(2) + "\n");
  return s;
}

std::vector<Snapshot> RunStore::list_snapshots(const std::string& run) const {
  std::vector<Snapshot> out;
  const fs::path dir = run_dir(run) / "snapshots";
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(snapshot_from_json(parse_file(f)));
  return out;
}

Snapshot RunStore::read_snapshot(const std::string& run, const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::not_found, "unknown snapshot: " + id);
  const fs::path p = run_dir(run) / "snapshots" / (id + ".json");
  if (!fs::exists(p)) fail(ErrorCode::not_found, "unknown snapshot: " + id);
  return snapshot_from_json(parse_file(p));
}

bool RunStore::begin_solve(const std::string& run) {
  std::lock_guard lock(mu_);
  return active_.insert(run).second;
}

void RunStore::end_solve(const std::string& run) {
  std::lock_guard lock(mu_);
  active_.erase(run);
}

bool RunStore::solving(const std::string& run) const {
  std::lock_guard lock(mu_);
  return active_.contains(run);
}

std::mutex& RunStore::run_mutex(const std::string& run) {
  std::lock_guard lock(mu_);
  auto& m = run_mutexes_[run];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

}  // namespace regionflow
