// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/csv_reader.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "regionflow/error.hpp"

namespace regionflow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const auto* first = s.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc() && ptr == first + len;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty()) return std::nullopt;
  const bool iso = s.size() >= 19 && s[4] == '-' && s[7] == '-';
  if (!iso) {
    const auto v = parse_double(s);
    if (!v || !std::isfinite(*v)) return std::nullopt;
    return static_cast<std::int64_t>(std::floor(*v));
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d)) return std::nullopt;
  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  if (s[13] != ':' || s[16] != ':') return std::nullopt;
  if (!read_int(s, 11, 2, h) || !read_int(s, 14, 2, mi) || !read_int(s, 17, 2, sec)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  std::int64_t offset = 0;
  if (pos < s.size()) {
    const char c = s[pos];
    if (c == 'Z' && pos + 1 == s.size()) {
      // UTC
    } else if ((c == '+' || c == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!read_int(s, pos + 1, 2, oh) || !read_int(s, pos + 4, 2, om)) return std::nullopt;
      offset = (oh * 3600 + om * 60) * (c == '+' ? 1 : -1);
    } else {
      return std::nullopt;
    }
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec - offset;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r' && c != '\n') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

CsvTrips read_trips_csv(std::istream& in) {
  static constexpr std::array<const char*, 6> kColumns = {
      "pickup_datetime",   "dropoff_datetime", "pickup_longitude",
      "pickup_latitude",   "dropoff_longitude", "dropoff_latitude"};
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::invalid_input, "empty CSV: missing header");
  const auto header = split_csv_line(line);
  std::array<std::size_t, 6> col{};
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    bool found = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == kColumns[k]) {
        col[k] = i;
        found = true;
        break;
      }
    }
    if (!found) {
      fail(ErrorCode::invalid_input, std::string("missing required column: ") + kColumns[k]);
    }
  }
  CsvTrips out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++out.report.rows_read;
    const auto f = split_csv_line(line);
    bool ok = true;
    auto field = [&](std::size_t k) -> std::string_view {
      if (col[k] >= f.size()) {
        ok = false;
        return {};
      }
      return f[col[k]];
    };
    const auto pickup = parse_timestamp(field(0));
    const auto dropoff = parse_timestamp(field(1));
    const auto plon = parse_double(field(2));
    const auto plat = parse_double(field(3));
    const auto dlon = parse_double(field(4));
    const auto dlat = parse_double(field(5));
    if (!ok || !pickup || !dropoff || !plon || !plat || !dlon || !dlat) {
      out.report.skip(SkipReason::malformed);
      continue;
    }
    out.trips.push_back({*pickup, *dropoff, *plon, *plat, *dlon, *dlat});
  }
  return out;
}

CsvTrips read_trips_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read " + path.string());
  return read_trips_csv(in);
}

}  // namespace regionflow
