// Licensed under the Apache License 2.0 (see LICENSE file).

#include <algorithm>
#include <cmath>
#include <string>

#include "regionflow/error.hpp"
#include "regionflow/solver.hpp"

namespace regionflow {

void HyperParams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::invalid_input, std::string(name) + " must be a finite value >= 0");
    }
  };
  nonneg(alpha, "alpha");
  nonneg(beta, "beta");
  nonneg(lambda, "lambda");
  nonneg(ortho, "ortho");
  nonneg(unit_norm, "unit_norm");
  if (!(tol > 0.0)) fail(ErrorCode::invalid_input, "tol must be > 0");
  if (max_iters < 1) fail(ErrorCode::invalid_input, "max_iters must be >= 1");
  if (warm_start_iters < 0) fail(ErrorCode::invalid_input, "warm_start_iters must be >= 0");
  if (k_max < 1) fail(ErrorCode::invalid_input, "k_max must be >= 1");
  if (!(ortho_tol > 0.0)) fail(ErrorCode::invalid_input, "ortho_tol must be > 0");
}

Weights effective_weights(const HyperParams& hp, const Matrix& x, int k, int k_prev) {
  if (hp.weight_mode == WeightMode::absolute) {
    return {hp.alpha, hp.beta, hp.lambda, hp.ortho, hp.unit_norm};
  }
  double s = x.squaredNorm();
  if (!(s > 0.0)) s = 1.0;
  const double kk = std::max(k, 1);
  return {hp.alpha * s / std::max(k_prev, 1), hp.beta, hp.lambda, hp.ortho * s / kk,
          hp.unit_norm * s / kk};
}

double ortho_residual(const Matrix& w) {
  if (w.cols() == 0) return 0.0;
  const Matrix g = w.transpose() * w;
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

namespace {

double ortho_penalty(const Matrix& w, const Weights& wt) {
  if (wt.ortho == 0.0 && wt.unit_norm == 0.0) return 0.0;
  const Matrix g = w.transpose() * w;
  double diag = 0.0;
  double off = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (i == j) {
        diag += (g(i, i) - 1.0) * (g(i, i) - 1.0);
      } else {
        off += g(i, j) * g(i, j);
      }
    }
  }
  return wt.unit_norm * diag + wt.ortho * off;
}

}  // namespace

TermValues objective_terms(const Matrix& x, const Matrix& w, const Matrix& h, const Matrix* m,
                           const FactorizationFrame* prev, const AdjacencyGraph& graph,
                           const Weights& weights) {
  TermValues tv;
  tv.reconstruction = (x - w * h.transpose()).squaredNorm();
  if (prev && m) {
    if (weights.alpha != 0.0) {
      tv.temporal_w = weights.alpha * (prev->W - w * m->transpose()).squaredNorm();
    }
    if (weights.beta != 0.0) {
      tv.temporal_h = weights.beta * (prev->H - h * m->transpose()).squaredNorm();
    }
  }
  if (weights.lambda != 0.0) tv.spatial = weights.lambda * Laplacian(graph).edge_sum(h);
  tv.ortho_penalty = ortho_penalty(w, weights);
  return tv;
}

double objective(const FeatureMatrix& x, const FactorizationFrame& frame,
                 const FactorizationFrame* prev, const AdjacencyGraph& graph,
                 const HyperParams& hp) {
  const auto n = x.data.cols();
  const auto k = frame.W.cols();
  if (x.data.rows() != 2 * n || frame.W.rows() != 2 * n || frame.H.rows() != n ||
      frame.H.cols() != k || graph.n != n) {
    fail(ErrorCode::invalid_input, "objective: dimension mismatch");
  }
  if (prev) {
    if (!frame.M || frame.M->rows() != prev->W.cols() || frame.M->cols() != k ||
        prev->W.rows() != 2 * n || prev->H.rows() != n) {
      fail(ErrorCode::invalid_input, "objective: transition matrix does not match prev frame");
    }
  }
  const int k_prev = prev ? static_cast<int>(prev->W.cols()) : 0;
  const Weights wt = effective_weights(hp, x.data, static_cast<int>(k), k_prev);
  const Matrix* m = prev && frame.M ? &*frame.M : nullptr;
  return objective_terms(x.data, frame.W, frame.H, m, prev, graph, wt).objective();
}

}  // namespace regionflow
