// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <vector>

namespace regionflow {

/// Maximum-total-weight assignment (Kuhn-Munkres with potentials, O(n^3)).
/// `weights` is rows x cols, rectangular allowed; internally padded to a
/// square with zero-weight dummies. Returns the matched column for each row,
/// or -1 when the row landed on a dummy column.
std::vector<int> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weights);

}  // namespace regionflow
