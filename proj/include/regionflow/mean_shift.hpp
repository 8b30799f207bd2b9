// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <vector>

#include "regionflow/matrix_io.hpp"

namespace regionflow {

struct MeanShiftResult {
  double bandwidth = 0.0;
  std::vector<Vector> modes;      // after merging and pruning
  std::vector<int> support;       // points converging to each mode
  std::vector<int> labels;        // mode per point, -1 if its mode was pruned
};

/// Flat-kernel mean shift seeded from every point (rows of `points`).
/// Converged positions closer than bandwidth/2 are merged; modes reached by
/// fewer than `min_support` points are dropped unless that would drop all.
MeanShiftResult mean_shift(const Matrix& points, double bandwidth, int min_support = 1);

/// Half the largest pairwise distance over a deterministic strided
/// subsample of at most `max_sample` rows.
double default_bandwidth(const Matrix& points, int max_sample = 500);

/// Row-wise scores on the top `dims` principal axes of the centred rows.
Matrix principal_scores(const Matrix& points, int dims);

}  // namespace regionflow
