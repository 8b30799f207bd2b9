// Licensed under the Apache License 2.0 (see LICENSE file).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "regionflow/error.hpp"
#include "regionflow/solver.hpp"

namespace regionflow {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Real roots of x^3 + p x + q = 0.
int depressed_cubic_roots(double p, double q, std::array<double, 3>& roots) {
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    roots[0] = std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s);
    return 1;
  }
  if (p == 0.0) {
    roots[0] = 0.0;
    return 1;
  }
  const double r = 2.0 * std::sqrt(-p / 3.0);
  const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
  const double phi = std::acos(arg) / 3.0;
  for (int m = 0; m < 3; ++m) roots[m] = r * std::cos(phi - 2.0 * std::numbers::pi * m / 3.0);
  return 3;
}

class FrameSolver {
 public:
  FrameSolver(const Matrix& x, const FactorizationFrame* prev, const AdjacencyGraph& graph,
              const Weights& wt, const SolveOptions& options, int t)
      : x_(x), prev_(prev), graph_(graph), lap_(graph), wt_(wt), options_(options), t_(t) {}

  double penalized(const FactorizationFrame& f) const {
    const Matrix* m = prev_ ? &*f.M : nullptr;
    return objective_terms(x_, f.W, f.H, m, prev_, graph_, wt_).penalized();
  }

  // One sweep of exact scalar minimisations over W. Each entry solves a
  // quartic in one variable: the quadratic data/temporal part plus the
  // unit-norm and off-diagonal penalty on W^T W.
  void update_w(FactorizationFrame& f) const {
    const Eigen::Index rows = f.W.rows();
    const Eigen::Index k = f.W.cols();
    Matrix g = f.H.transpose() * f.H;
    Matrix b = x_ * f.H;
    if (prev_ && wt_.alpha != 0.0) {
      g += wt_.alpha * f.M->transpose() * *f.M;
      b += wt_.alpha * prev_->W * *f.M;
    }
    Matrix gram = f.W.transpose() * f.W;
    const double mu_n = wt_.unit_norm;
    const double mu_o = wt_.ortho;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) {
        const double w0 = f.W(r, c);
        const double q = g(c, c);
        double p = b(r, c);
        double sq = 0.0;     // sum_j W(r,j)^2, j != c
        double cross = 0.0;  // sum_j W(r,j) * (gram(c,j) - w0 W(r,j)), j != c
        for (Eigen::Index j = 0; j < k; ++j) {
          if (j == c) continue;
          const double wj = f.W(r, j);
          p -= wj * g(j, c);
          sq += wj * wj;
          cross += wj * (gram(c, j) - w0 * wj);
        }
        const double s = gram(c, c) - w0 * w0;
        auto cost = [&](double v) {
          double val = q * v * v - 2.0 * p * v;
          if (mu_n != 0.0) {
            const double d = s + v * v - 1.0;
            val += mu_n * d * d;
          }
          if (mu_o != 0.0) {
            // 2 * sum_j (c_j + v W(r,j))^2, expanded without the v-free part.
            val += 2.0 * mu_o * (2.0 * v * cross + v * v * sq);
          }
          return val;
        };
        // d cost / dv / 2 = a v^3 + b1 v + c0.
        const double a = 2.0 * mu_n;
        const double b1 = q + 2.0 * mu_n * (s - 1.0) + 2.0 * mu_o * sq;
        const double c0 = 2.0 * mu_o * cross - p;
        double best = w0;
        double best_cost = cost(w0);
        auto consider = [&](double v) {
          if (!(v >= 0.0) || !std::isfinite(v)) return;
          const double cv = cost(v);
          if (cv < best_cost) {
            best_cost = cv;
            best = v;
          }
        };
        consider(0.0);
        if (a > 0.0) {
          std::array<double, 3> roots{};
          const int nr = depressed_cubic_roots(b1 / a, c0 / a, roots);
          for (int i = 0; i < nr; ++i) consider(roots[static_cast<std::size_t>(i)]);
        } else if (b1 > 0.0) {
          consider(-c0 / b1);
        }
        if (best != w0) {
          const double delta = best - w0;
          for (Eigen::Index j = 0; j < k; ++j) {
            if (j == c) continue;
            gram(c, j) += delta * f.W(r, j);
            gram(j, c) = gram(c, j);
          }
          gram(c, c) += best * best - w0 * w0;
          f.W(r, c) = best;
        }
      }
    }
  }

  // One sweep over H, column by column. The spatial term couples rows
  // through the graph, so each entry uses the current neighbour values.
  void update_h(FactorizationFrame& f) const {
    const Eigen::Index n = f.H.rows();
    const Eigen::Index k = f.H.cols();
    Matrix g = f.W.transpose() * f.W;
    Matrix b = x_.transpose() * f.W;
    if (prev_ && wt_.beta != 0.0) {
      g += wt_.beta * f.M->transpose() * *f.M;
      b += wt_.beta * prev_->H * *f.M;
    }
    const double lambda = wt_.lambda;
    const auto& deg = lap_.degree();
    for (Eigen::Index c = 0; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double num = b(i, c);
        for (Eigen::Index j = 0; j < k; ++j) {
          if (j != c) num -= f.H(i, j) * g(j, c);
        }
        double den = g(c, c);
        if (lambda != 0.0) {
          double nb = 0.0;
          for (int other : graph_.neighbors[static_cast<std::size_t>(i)]) nb += f.H(other, c);
          num += lambda * nb;
          den += lambda * deg[static_cast<std::size_t>(i)];
        }
        f.H(i, c) = den > 0.0 ? std::max(0.0, num / den) : 0.0;
      }
    }
  }

  // Rows of M are independent nonnegative least-squares problems in K
  // unknowns; a few coordinate sweeps each. When both temporal weights are
  // zero M does not enter the objective and is fitted with unit weights as
  // a diagnostic.
  void update_m(FactorizationFrame& f, int sweeps) const {
    double a = wt_.alpha;
    double bw = wt_.beta;
    if (a == 0.0 && bw == 0.0) {
      a = 1.0;
      bw = 1.0;
    }
    const Matrix q = a * f.W.transpose() * f.W + bw * f.H.transpose() * f.H;
    const Matrix rhs = a * prev_->W.transpose() * f.W + bw * prev_->H.transpose() * f.H;
    Matrix& m = *f.M;
    const Eigen::Index k = m.cols();
    for (int s = 0; s < sweeps; ++s) {
      double change = 0.0;
      for (Eigen::Index p = 0; p < m.rows(); ++p) {
        for (Eigen::Index c = 0; c < k; ++c) {
          if (!(q(c, c) > 0.0)) {
            m(p, c) = 0.0;
            continue;
          }
          double num = rhs(p, c);
          for (Eigen::Index j = 0; j < k; ++j) {
            if (j != c) num -= m(p, j) * q(j, c);
          }
          const double v = std::max(0.0, num / q(c, c));
          change = std::max(change, std::abs(v - m(p, c)));
          m(p, c) = v;
        }
      }
      if (change <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) break;
    }
  }

  // Runs one block update, reverting it if rounding made the objective go
  // up, and reports the step.
  template <class Update>
  double step(FactorizationFrame& f, Block block, int iteration, double before, Update&& update,
              const char* name) const {
    const Matrix saved = block == Block::W ? f.W : block == Block::H ? f.H : *f.M;
    update(f);
    const Matrix& now = block == Block::W ? f.W : block == Block::H ? f.H : *f.M;
    if (!all_finite(now)) throw NumericalFailure(t_, iteration, name);
    const double proposed = penalized(f);
    if (!std::isfinite(proposed)) throw NumericalFailure(t_, iteration, name);
    double after = proposed;
    const bool revert = proposed > before;
    if (revert) {
      (block == Block::W ? f.W : block == Block::H ? f.H : *f.M) = saved;
      after = before;
    }
    if (options_.on_block) options_.on_block({iteration, block, before, proposed, after, revert});
    return after;
  }

  // Nearest matrix with orthonormal columns (W (W^T W)^{-1/2}), clipped to
  // nonnegative and column-normalised.
  static Matrix polar_project(const Matrix& w) {
    const Matrix gram = w.transpose() * w;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    const Vector& ev = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(ev.maxCoeff(), 1e-300);
    Vector inv_sqrt(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      inv_sqrt[i] = ev[i] > cutoff ? 1.0 / std::sqrt(ev[i]) : 0.0;
    }
    Matrix p = w * eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
    p = p.cwiseMax(0.0);
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double norm = p.col(c).norm();
      if (norm > 0.0) p.col(c) /= norm;
    }
    return p;
  }

 private:
  const Matrix& x_;
  const FactorizationFrame* prev_;
  const AdjacencyGraph& graph_;
  Laplacian lap_;
  Weights wt_;
  const SolveOptions& options_;
  int t_;
};

}  // namespace

Matrix preprocess(const Matrix& x, const HyperParams& hp) {
  Matrix out = x;
  if (hp.log1p) out = out.array().log1p().matrix();
  if (hp.normalize_columns) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double norm = out.col(c).norm();
      if (norm > 0.0) out.col(c) /= norm;
    }
  }
  return out;
}

FactorizationFrame solve_frame(const FeatureMatrix& x, const FactorizationFrame* prev,
                               const AdjacencyGraph& graph, int k, const HyperParams& hp,
                               const SolveOptions& options) {
  hp.validate();
  const Eigen::Index n = x.data.cols();
  if (x.data.rows() != 2 * n) fail(ErrorCode::invalid_input, "feature matrix must be 2N x N");
  if (graph.n != n) fail(ErrorCode::invalid_input, "adjacency graph size does not match N");
  if (!x.data.allFinite() || (x.data.array() < 0.0).any()) {
    fail(ErrorCode::invalid_input, "feature matrix must be finite and nonnegative");
  }
  if (prev && (prev->W.rows() != 2 * n || prev->H.rows() != n)) {
    fail(ErrorCode::invalid_input, "previous frame dimensions do not match");
  }

  FactorizationFrame f = init_frame(x, k, hp.seed);
  f.t = x.t;
  const int k_prev = prev ? static_cast<int>(prev->W.cols()) : 0;
  f.weights = effective_weights(hp, x.data, k, k_prev);
  FrameSolver solver(x.data, prev, graph, f.weights, options, x.t);

  if (prev) {
    f.M = Matrix::Zero(k_prev, k);
    solver.update_m(f, 50);
  }

  // Warm start: plain cycles without the W^T W penalty, columns of W
  // rescaled to unit norm after each. A stiff penalty from the first cycle
  // tends to freeze the supports of W where the SVD start put them.
  const int warm = std::min(hp.warm_start_iters, hp.max_iters / 2);
  if (warm > 0) {
    Weights plain = f.weights;
    plain.ortho = plain.unit_norm = 0.0;
    const SolveOptions quiet;
    FrameSolver ws(x.data, prev, graph, plain, quiet, x.t);
    for (int it = 0; it < warm; ++it) {
      ws.update_w(f);
      for (Eigen::Index c = 0; c < f.W.cols(); ++c) {
        const double norm = f.W.col(c).norm();
        if (norm > 0.0) {
          f.W.col(c) /= norm;
          f.H.col(c) *= norm;
        }
      }
      ws.update_h(f);
      if (prev) ws.update_m(f, 5);
    }
    if (!all_finite(f.W) || !all_finite(f.H)) throw NumericalFailure(x.t, 0, "warm start");
  }

  // Decreases below this are rounding noise relative to the data.
  const double floor = 1e-14 * std::max(x.data.squaredNorm(), std::numeric_limits<double>::min());
  double current = solver.penalized(f);
  if (!std::isfinite(current)) throw NumericalFailure(x.t, 0, "initialisation");
  f.objective_trace.push_back(current);
  f.iterations = warm;
  for (int it = 1; it <= hp.max_iters - warm; ++it) {
    const double start = current;
    current = solver.step(f, Block::W, it, current, [&](auto& fr) { solver.update_w(fr); }, "W");
    current = solver.step(f, Block::H, it, current, [&](auto& fr) { solver.update_h(fr); }, "H");
    if (prev) {
      current = solver.step(f, Block::M, it, current, [&](auto& fr) { solver.update_m(fr, 5); }, "M");
    }
    f.objective_trace.push_back(current);
    f.iterations = warm + it;
    const double scale = std::max(std::abs(start), floor);
    if (start - current <= hp.tol * scale) {
      f.converged = true;
      break;
    }
  }

  if (hp.ortho > 0.0) {
    const double before = current;
    f.W = FrameSolver::polar_project(f.W);
    current = solver.penalized(f);
    if (options.on_block) options.on_block({0, Block::projection, before, current, current, false});
    // Refit H and M against the projected W.
    for (int s = 0; s < 100; ++s) {
      const double start = current;
      current = solver.step(f, Block::H, 0, current, [&](auto& fr) { solver.update_h(fr); }, "H");
      if (prev) {
        current = solver.step(f, Block::M, 0, current, [&](auto& fr) { solver.update_m(fr, 5); }, "M");
      }
      if (start - current <= hp.tol * std::max(std::abs(start), floor)) break;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (x.data.col(i).isZero(0.0)) {
      f.zero_grids.push_back(static_cast<GridIndex>(i));
      f.H.row(i).setConstant(1.0 / k);
    }
  }
  const Matrix* m = prev ? &*f.M : nullptr;
  f.terms = objective_terms(x.data, f.W, f.H, m, prev, graph, f.weights);
  f.ortho_residual = ortho_residual(f.W);
  return f;
}

std::vector<FactorizationFrame> solve_series(std::span<const FeatureMatrix> xs,
                                             const AdjacencyGraph& graph,
                                             const HyperParams& hp,
                                             std::optional<std::span<const int>> k_override,
                                             const SolveOptions& options) {
  hp.validate();
  if (xs.empty()) fail(ErrorCode::invalid_input, "solve_series: empty series");
  if (k_override && k_override->size() != xs.size()) {
    fail(ErrorCode::invalid_input, "solve_series: K override must have one entry per frame");
  }
  const auto n = xs.front().data.cols();
  std::vector<FactorizationFrame> frames;
  frames.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (xs[t].data.cols() != n || xs[t].data.rows() != 2 * n) {
      fail(ErrorCode::invalid_input, "solve_series: inconsistent frame dimensions");
    }
    if (options.on_frame) options.on_frame(static_cast<int>(t));
    const FeatureMatrix x{xs[t].t, preprocess(xs[t].data, hp)};
    int k = k_override ? (*k_override)[t] : choose_k(x, std::nullopt, hp.k_max);
    k = std::clamp(k, 1, static_cast<int>(n));
    const FactorizationFrame* prev = frames.empty() ? nullptr : &frames.back();
    frames.push_back(solve_frame(x, prev, graph, k, hp, options));
    if (options.on_frame_solved) options.on_frame_solved(frames.back());
  }
  return frames;
}

Matrix pattern_correlation(const Matrix& w) {
  const Eigen::Index k = w.cols();
  Matrix c = Matrix::Zero(k, k);
  Vector norms(k);
  for (Eigen::Index i = 0; i < k; ++i) norms[i] = w.col(i).norm();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        c(i, j) = w.col(i).dot(w.col(j)) / (norms[i] * norms[j]);
      }
    }
  }
  return c;
}

}  // namespace regionflow
