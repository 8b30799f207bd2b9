// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionflow/error.hpp"

namespace regionflow {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& stem, const char* suffix) {
  fs::path p = stem;
  p += suffix;
  return p;
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::io_error, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix(const fs::path& stem, const Matrix& m) {
  std::string payload(static_cast<std::size_t>(m.size()) * 8, '\0');
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(m(r, c)));
      std::memcpy(payload.data() + off, &bits, 8);
      off += 8;
    }
  }
  json sidecar = {
      {"format", "regionflow-matrix"},
      {"version", kMatrixFormatVersion},
      {"rows", m.rows()},
      {"cols", m.cols()},
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"layout", "row-major"},
  };
  write_file_atomic(with_suffix(stem, ".bin"), payload);
  write_file_atomic(with_suffix(stem, ".json"), sidecar.dump(2) + "\n");
}

Matrix read_matrix(const fs::path& stem) {
  const json sidecar = json::parse(read_file(with_suffix(stem, ".json")));
  if (sidecar.value("format", "") != "regionflow-matrix" ||
      sidecar.value("version", 0) != kMatrixFormatVersion) {
    fail(ErrorCode::io_error, "unsupported matrix sidecar " + stem.string());
  }
  const auto rows = sidecar.at("rows").get<Eigen::Index>();
  const auto cols = sidecar.at("cols").get<Eigen::Index>();
  const std::string payload = read_file(with_suffix(stem, ".bin"));
  if (payload.size() != static_cast<std::size_t>(rows * cols) * 8) {
    fail(ErrorCode::io_error, "matrix payload size mismatch for " + stem.string());
  }
  Matrix m(rows, cols);
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, payload.data() + off, 8);
      m(r, c) = std::bit_cast<double>(to_little(bits));
      off += 8;
    }
  }
  return m;
}

}  // namespace regionflow
