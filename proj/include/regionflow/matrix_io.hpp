// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <filesystem>

#include <Eigen/Dense>

namespace regionflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// On-disk matrix: `<stem>.bin` holds rows*cols little-endian IEEE-754 doubles
// in row-major order, `<stem>.json` is the sidecar with dims and format tag.
// See docs/FORMATS.md.
inline constexpr int kMatrixFormatVersion = 1;

void write_matrix(const std::filesystem::path& stem, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& stem);

/// Writes `contents` to a temp file next to `path` and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace regionflow
