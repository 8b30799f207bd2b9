// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "regionflow/ingest.hpp"

namespace regionflow {

/// How the regularisation weights in HyperParams are read.
///
/// relative (default): weights are fractions of the frame's data energy
/// s = ||X_t||_F^2 so that the same values behave alike across datasets:
///   alpha_eff = alpha * s / K_prev   (W_prev has K_prev unit columns)
///   beta_eff  = beta                 (H already lives on the scale of X)
///   lambda_eff = lambda
///   ortho_eff = ortho * s / K, unit_norm_eff = unit_norm * s / K
/// absolute: the numbers are used as given.
enum class WeightMode { relative, absolute };

struct HyperParams {
  double alpha = 0.1;      // temporal coupling of W
  double beta = 0.1;       // temporal coupling of H
  double lambda = 0.5;     // spatial coupling of adjacent rows of H
  double ortho = 1.0;      // off-diagonal part of the W^T W = I penalty
  double unit_norm = 1.0;  // diagonal part of the W^T W = I penalty
  int max_iters = 500;       // BCD cycles, warm start included
  int warm_start_iters = 30; // unpenalised cycles before the main loop, at most max_iters / 2
  double tol = 1e-7;  // relative change of the penalised objective
  std::uint64_t seed = 0;
  int k_max = 10;
  double ortho_tol = 0.05;
  WeightMode weight_mode = WeightMode::relative;
  bool log1p = false;
  bool normalize_columns = false;

  void validate() const;
};

struct Weights {
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  double ortho = 0.0;
  double unit_norm = 0.0;
};

Weights effective_weights(const HyperParams& hp, const Matrix& x, int k, int k_prev);

/// Weighted values of the objective terms.
struct TermValues {
  double reconstruction = 0.0;  // ||X - W H^T||^2
  double temporal_w = 0.0;      // alpha ||W_prev - W M^T||^2
  double temporal_h = 0.0;      // beta ||H_prev - H M^T||^2
  double spatial = 0.0;         // lambda sum over edges ||h_i - h_j||^2
  double ortho_penalty = 0.0;   // unit-norm and off-diagonal parts of ||W^T W - I||^2

  double objective() const { return reconstruction + temporal_w + temporal_h + spatial; }
  double penalized() const { return objective() + ortho_penalty; }
};

struct FactorizationFrame {
  int t = 0;
  int k = 0;
  Matrix W;                  // 2N x K
  Matrix H;                  // N x K
  std::optional<Matrix> M;   // K_prev x K, absent for the first frame
  /// Penalised objective: entry 0 once the warm start is done, then one per
  /// main-loop cycle.
  std::vector<double> objective_trace;
  TermValues terms;          // at the returned factors
  Weights weights;
  double ortho_residual = 0.0;  // max |W^T W - I|
  int iterations = 0;        // cycles run, warm start included
  bool converged = false;
  std::vector<GridIndex> zero_grids;  // rows of H reset to 1/K
};

/// L = D - A for an adjacency graph.
class Laplacian {
 public:
  explicit Laplacian(const AdjacencyGraph& graph);

  const AdjacencyGraph& graph() const { return *graph_; }
  const std::vector<double>& degree() const { return degree_; }
  Eigen::SparseMatrix<double> matrix() const;

  /// x^T L x.
  double quadratic(const Vector& x) const;
  /// trace(H^T L H).
  double trace_form(const Matrix& h) const;
  /// Sum over edges (each counted once) of ||h_i - h_j||^2; equals trace_form.
  double edge_sum(const Matrix& h) const;

 private:
  const AdjacencyGraph* graph_;
  std::vector<double> degree_;
};

/// Term values for explicit factors. `prev` supplies W_prev and H_prev and
/// must be paired with `m`.
TermValues objective_terms(const Matrix& x, const Matrix& w, const Matrix& h,
                           const Matrix* m, const FactorizationFrame* prev,
                           const AdjacencyGraph& graph, const Weights& weights);

/// The four-term objective (reconstruction, two temporal, spatial) for a
/// frame, with weights resolved from `hp`. Throws invalid_input on
/// dimension mismatch.
double objective(const FeatureMatrix& x, const FactorizationFrame& frame,
                 const FactorizationFrame* prev, const AdjacencyGraph& graph,
                 const HyperParams& hp);

/// NNDSVD-style start: nonnegative parts of the top-K singular pairs, W
/// columns scaled to unit norm, zeros filled with small seeded noise.
FactorizationFrame init_frame(const FeatureMatrix& x, int k, std::uint64_t seed);

enum class Block { W, H, M, projection };

struct BlockStep {
  int iteration = 0;  // 1-based cycle; 0 for steps after the main loop
  Block block = Block::W;
  double before = 0.0;    // penalised objective
  double proposed = 0.0;  // right after the update, before any safeguard
  double after = 0.0;     // kept value; equals before when the step was reverted
  bool reverted = false;
};

struct SolveOptions {
  std::function<void(const BlockStep&)> on_block;
  /// Called with the frame index before each frame of a series is solved.
  std::function<void(int)> on_frame;
  /// Called with each frame of a series once it is solved.
  std::function<void(const FactorizationFrame&)> on_frame_solved;
};

/// Block coordinate descent over W, H and M. Each block is a full
/// Gauss-Seidel sweep of exact scalar minimisations, so the penalised
/// objective never increases within the main loop. With ortho > 0 the result
/// is polar-projected onto nonnegative orthonormal columns and H, M are
/// re-fitted.
FactorizationFrame solve_frame(const FeatureMatrix& x, const FactorizationFrame* prev,
                               const AdjacencyGraph& graph, int k, const HyperParams& hp,
                               const SolveOptions& options = {});

/// Optional log1p transform and column normalisation, per hp flags.
Matrix preprocess(const Matrix& x, const HyperParams& hp);

/// Pattern count by flat-kernel mean shift over the L2-normalised nonzero
/// columns of X. Result is clamped to [1, k_max]. See mean_shift.hpp.
int choose_k(const FeatureMatrix& x, std::optional<double> bandwidth = std::nullopt,
             int k_max = 10);

/// Frames solved in order, each with its predecessor as prev. K comes from
/// choose_k unless `k_override` is given (one entry per frame).
std::vector<FactorizationFrame> solve_series(std::span<const FeatureMatrix> xs,
                                             const AdjacencyGraph& graph,
                                             const HyperParams& hp,
                                             std::optional<std::span<const int>> k_override = {},
                                             const SolveOptions& options = {});

/// Cosine similarity of the columns of W; zero columns give zero rows/cols.
Matrix pattern_correlation(const Matrix& w);

/// max |W^T W - I|.
double ortho_residual(const Matrix& w);

}  // namespace regionflow
