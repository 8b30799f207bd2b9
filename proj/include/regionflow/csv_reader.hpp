// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regionflow/ingest.hpp"

namespace regionflow {

/// Parses "YYYY-MM-DD[ T]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM]" or an epoch-seconds
/// number. Returns UTC epoch seconds (fractions truncated toward -inf).
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Splits one CSV line. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTrips {
  std::vector<TripRecord> trips;
  IngestReport report;  // rows_read and malformed rows
};

/// Reads trip CSV with header columns pickup_datetime, dropoff_datetime,
/// pickup_longitude, pickup_latitude, dropoff_longitude, dropoff_latitude
/// (any order, extra columns ignored). A missing column is an invalid_input
/// error naming it; rows that fail to parse are counted as malformed.
CsvTrips read_trips_csv(std::istream& in);
CsvTrips read_trips_csv(const std::filesystem::path& path);

}  // namespace regionflow
