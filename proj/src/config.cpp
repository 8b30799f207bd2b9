// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/config.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "regionflow/csv_reader.hpp"
#include "regionflow/error.hpp"

namespace regionflow {

namespace pt = boost::property_tree;

TimeBinning BinningConfig::resolve(std::int64_t first_pickup, std::int64_t last_pickup) const {
  constexpr std::int64_t kDay = 86400;
  TimeBinning b;
  b.interval_len = interval_len;
  b.start = start ? *start : first_pickup - ((first_pickup % kDay) + kDay) % kDay;
  if (n_bins > 0) {
    b.n_bins = n_bins;
  } else {
    if (interval_len <= 0) fail(ErrorCode::invalid_input, "binning interval must be positive");
    const std::int64_t span = std::max<std::int64_t>(0, last_pickup - b.start);
    b.n_bins = static_cast<int>(span / interval_len + 1);
  }
  b.validate();
  return b;
}

void Config::validate() const {
  solver.validate();
  dayparts.validate();
  if (fixed_k < 0) fail(ErrorCode::invalid_input, "solver.k must be >= 0");
  if (bandwidth && !(*bandwidth > 0.0)) fail(ErrorCode::invalid_input, "solver.bandwidth must be > 0");
  if (min_width < 1) fail(ErrorCode::invalid_input, "evolution.min_width must be >= 1");
  if (binning.interval_len <= 0) fail(ErrorCode::invalid_input, "binning.interval must be positive");
  if (binning.n_bins < 0) fail(ErrorCode::invalid_input, "binning.n_bins must be >= 0");
}

std::int64_t parse_duration(const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_input, "bad duration: " + text);
  }
  const std::string unit = text.substr(used);
  std::int64_t scale = 1;
  if (unit.empty() || unit == "s") scale = 1;
  else if (unit == "m") scale = 60;
  else if (unit == "h") scale = 3600;
  else if (unit == "d") scale = 86400;
  else fail(ErrorCode::invalid_input, "bad duration unit: " + text);
  if (v <= 0) fail(ErrorCode::invalid_input, "duration must be positive: " + text);
  return v * scale;
}

std::vector<std::uint8_t> read_mask_file(const std::filesystem::path& path, int nx, int ny) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read mask file " + path.string());
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (static_cast<int>(rows.size()) != ny) {
    fail(ErrorCode::invalid_input, "mask file must have ny = " + std::to_string(ny) + " rows");
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int r = 0; r < ny; ++r) {
    const std::string& s = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(s.size()) != nx) {
      fail(ErrorCode::invalid_input, "mask row " + std::to_string(r) + " must have nx characters");
    }
    const int iy = ny - 1 - r;
    for (int ix = 0; ix < nx; ++ix) {
      const char c = s[static_cast<std::size_t>(ix)];
      if (c != '0' && c != '1') fail(ErrorCode::invalid_input, "mask characters must be 0 or 1");
      mask[static_cast<std::size_t>(iy * nx + ix)] = c == '1';
    }
  }
  return mask;
}

namespace {

template <typename T>
T get(const pt::ptree& sec, const std::string& section, const std::string& key) {
  try {
    return sec.get<T>(key);
  } catch (const pt::ptree_error&) {
    fail(ErrorCode::invalid_input, "bad value for " + section + "." + key);
  }
}

bool get_bool(const pt::ptree& sec, const std::string& section, const std::string& key) {
  std::string v = get<std::string>(sec, section, key);
  for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorCode::invalid_input, "bad boolean for " + section + "." + key);
}

void check_keys(const pt::ptree& sec, const std::string& section, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : sec) {
    if (!allowed.contains(key)) fail(ErrorCode::invalid_input, "unknown config key " + section + "." + key);
  }
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "relative") return WeightMode::relative;
  if (s == "absolute") return WeightMode::absolute;
  fail(ErrorCode::invalid_input, "weight_mode must be relative or absolute");
}

}  // namespace

Config parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::invalid_input, std::string("config: ") + e.what());
  }
  Config c;
  for (const auto& [section, sec] : tree) {
    if (section == "grid") {
      check_keys(sec, section, {"origin_lon", "origin_lat", "cell_lon", "cell_lat", "nx", "ny", "mask_file"});
      for (const char* k : {"origin_lon", "origin_lat", "cell_lon", "cell_lat", "nx", "ny"}) {
        if (!sec.count(k)) fail(ErrorCode::invalid_input, std::string("config: missing grid.") + k);
      }
      const int nx = get<int>(sec, section, "nx");
      const int ny = get<int>(sec, section, "ny");
      std::vector<std::uint8_t> mask;
      if (sec.count("mask_file")) {
        std::filesystem::path p = get<std::string>(sec, section, "mask_file");
        if (p.is_relative()) p = base_dir / p;
        mask = read_mask_file(p, nx, ny);
      }
      c.grid = GridSpec(get<double>(sec, section, "origin_lon"), get<double>(sec, section, "origin_lat"),
                        get<double>(sec, section, "cell_lon"), get<double>(sec, section, "cell_lat"),
                        nx, ny, std::move(mask));
    } else if (section == "binning") {
      check_keys(sec, section, {"start", "interval", "n_bins"});
      if (sec.count("start")) {
        const auto ts = parse_timestamp(get<std::string>(sec, section, "start"));
        if (!ts) fail(ErrorCode::invalid_input, "bad value for binning.start");
        c.binning.start = *ts;
      }
      if (sec.count("interval")) c.binning.interval_len = parse_duration(get<std::string>(sec, section, "interval"));
      if (sec.count("n_bins")) c.binning.n_bins = get<int>(sec, section, "n_bins");
    } else if (section == "solver") {
      check_keys(sec, section, {"alpha", "beta", "lambda", "ortho", "unit_norm", "max_iters", "warm_start_iters", "tol", "seed",
                                "k_max", "ortho_tol", "weight_mode", "log1p", "normalize_columns", "k",
                                "bandwidth"});
      auto& s = c.solver;
      if (sec.count("alpha")) s.alpha = get<double>(sec, section, "alpha");
      if (sec.count("beta")) s.beta = get<double>(sec, section, "beta");
      if (sec.count("lambda")) s.lambda = get<double>(sec, section, "lambda");
      if (sec.count("ortho")) s.ortho = get<double>(sec, section, "ortho");
      if (sec.count("unit_norm")) s.unit_norm = get<double>(sec, section, "unit_norm");
      if (sec.count("max_iters")) s.max_iters = get<int>(sec, section, "max_iters");
      if (sec.count("warm_start_iters")) s.warm_start_iters = get<int>(sec, section, "warm_start_iters");
      if (sec.count("tol")) s.tol = get<double>(sec, section, "tol");
      if (sec.count("seed")) s.seed = get<std::uint64_t>(sec, section, "seed");
      if (sec.count("k_max")) s.k_max = get<int>(sec, section, "k_max");
      if (sec.count("ortho_tol")) s.ortho_tol = get<double>(sec, section, "ortho_tol");
      if (sec.count("weight_mode")) s.weight_mode = parse_weight_mode(get<std::string>(sec, section, "weight_mode"));
      if (sec.count("log1p")) s.log1p = get_bool(sec, section, "log1p");
      if (sec.count("normalize_columns")) s.normalize_columns = get_bool(sec, section, "normalize_columns");
      if (sec.count("k")) c.fixed_k = get<int>(sec, section, "k");
      if (sec.count("bandwidth")) c.bandwidth = get<double>(sec, section, "bandwidth");
    } else if (section == "overview") {
      check_keys(sec, section, {"dawn_end", "morning_end", "afternoon_end", "utc_offset_minutes"});
      if (sec.count("dawn_end")) c.dayparts.hours[0] = get<int>(sec, section, "dawn_end");
      if (sec.count("morning_end")) c.dayparts.hours[1] = get<int>(sec, section, "morning_end");
      if (sec.count("afternoon_end")) c.dayparts.hours[2] = get<int>(sec, section, "afternoon_end");
      if (sec.count("utc_offset_minutes")) c.dayparts.utc_offset_minutes = get<int>(sec, section, "utc_offset_minutes");
    } else if (section == "evolution") {
      check_keys(sec, section, {"min_width"});
      if (sec.count("min_width")) c.min_width = get<int>(sec, section, "min_width");
    } else {
      fail(ErrorCode::invalid_input, "unknown config section [" + section + "]");
    }
  }
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read config " + path.string());
  return parse_config(in, path.parent_path());
}

nlohmann::json to_json(const HyperParams& hp) {
  return {{"alpha", hp.alpha},
          {"beta", hp.beta},
          {"lambda", hp.lambda},
          {"ortho", hp.ortho},
          {"unit_norm", hp.unit_norm},
          {"max_iters", hp.max_iters},
          {"warm_start_iters", hp.warm_start_iters},
          {"tol", hp.tol},
          {"seed", hp.seed},
          {"k_max", hp.k_max},
          {"ortho_tol", hp.ortho_tol},
          {"weight_mode", hp.weight_mode == WeightMode::relative ? "relative" : "absolute"},
          {"log1p", hp.log1p},
          {"normalize_columns", hp.normalize_columns}};
}

nlohmann::json run_params_json(const Config& c) {
  nlohmann::json j = {{"solver", to_json(c.solver)},
                      {"k", c.fixed_k},
                      {"dayparts",
                       {{"dawn_end", c.dayparts.hours[0]},
                        {"morning_end", c.dayparts.hours[1]},
                        {"afternoon_end", c.dayparts.hours[2]},
                        {"utc_offset_minutes", c.dayparts.utc_offset_minutes}}},
                      {"min_width", c.min_width}};
  j["bandwidth"] = c.bandwidth ? nlohmann::json(*c.bandwidth) : nlohmann::json(nullptr);
  return j;
}

Config run_params_from_json(const nlohmann::json& j, Config c) {
  if (!j.is_object()) fail(ErrorCode::invalid_input, "run parameters must be a JSON object");
  try {
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      auto& h = c.solver;
      h.alpha = s.value("alpha", h.alpha);
      h.beta = s.value("beta", h.beta);
      h.lambda = s.value("lambda", h.lambda);
      h.ortho = s.value("ortho", h.ortho);
      h.unit_norm = s.value("unit_norm", h.unit_norm);
      h.max_iters = s.value("max_iters", h.max_iters);
      h.warm_start_iters = s.value("warm_start_iters", h.warm_start_iters);
      h.tol = s.value("tol", h.tol);
      h.seed = s.value("seed", h.seed);
      h.k_max = s.value("k_max", h.k_max);
      h.ortho_tol = s.value("ortho_tol", h.ortho_tol);
      if (s.contains("weight_mode")) h.weight_mode = parse_weight_mode(s.at("weight_mode").get<std::string>());
      h.log1p = s.value("log1p", h.log1p);
      h.normalize_columns = s.value("normalize_columns", h.normalize_columns);
    }
    c.fixed_k = j.value("k", c.fixed_k);
    if (j.contains("bandwidth")) {
      c.bandwidth = j.at("bandwidth").is_null() ? std::nullopt : std::optional<double>(j.at("bandwidth").get<double>());
    }
    if (j.contains("dayparts")) {
      const auto& d = j.at("dayparts");
      c.dayparts.hours[0] = d.value("dawn_end", c.dayparts.hours[0]);
      c.dayparts.hours[1] = d.value("morning_end", c.dayparts.hours[1]);
      c.dayparts.hours[2] = d.value("afternoon_end", c.dayparts.hours[2]);
      c.dayparts.utc_offset_minutes = d.value("utc_offset_minutes", c.dayparts.utc_offset_minutes);
    }
    c.min_width = j.value("min_width", c.min_width);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("run parameters: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace regionflow
