// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/assignment.hpp"

#include <algorithm>
#include <limits>

namespace regionflow {

std::vector<int> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weights) {
  const std::size_t rows = weights.size();
  if (rows == 0) return {};
  const std::size_t cols = weights.front().size();
  const std::size_t n = std::max(rows, cols);
  std::int64_t top = 0;
  for (const auto& r : weights) {
    for (auto w : r) top = std::max(top, w);
  }
  // Minimise cost = top - weight; dummy cells cost `top`.
  auto cost = [&](std::size_t i, std::size_t j) -> std::int64_t {
    return i < rows && j < cols ? top - weights[i][j] : top;
  };
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // Row potentials u, column potentials v, both 1-based; p[j] is the row
  // assigned to column j and way[] records the alternating path.
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i - 1 < rows && j - 1 < cols) match[i - 1] = static_cast<int>(j - 1);
  }
  return match;
}

}  // namespace regionflow
