// Licensed under the Apache License 2.0 (see LICENSE file).

#include "regionflow/solver.hpp"

namespace regionflow {

Laplacian::Laplacian(const AdjacencyGraph& graph) : graph_(&graph) {
  degree_.assign(static_cast<std::size_t>(graph.n), 0.0);
  for (const auto& [a, b] : graph.edges) {
    degree_[static_cast<std::size_t>(a)] += 1.0;
    degree_[static_cast<std::size_t>(b)] += 1.0;
  }
}

Eigen::SparseMatrix<double> Laplacian::matrix() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < graph_->n; ++i) trips.emplace_back(i, i, degree_[static_cast<std::size_t>(i)]);
  for (const auto& [a, b] : graph_->edges) {
    trips.emplace_back(a, b, -1.0);
    trips.emplace_back(b, a, -1.0);
  }
  Eigen::SparseMatrix<double> l(graph_->n, graph_->n);
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

double Laplacian::quadratic(const Vector& x) const {
  double acc = 0.0;
  for (int i = 0; i < graph_->n; ++i) acc += degree_[static_cast<std::size_t>(i)] * x[i] * x[i];
  for (const auto& [a, b] : graph_->edges) acc -= 2.0 * x[a] * x[b];
  return acc;
}

double Laplacian::trace_form(const Matrix& h) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < h.cols(); ++k) acc += quadratic(h.col(k));
  return acc;
}

double Laplacian::edge_sum(const Matrix& h) const {
  double acc = 0.0;
  for (const auto& [a, b] : graph_->edges) acc += (h.row(a) - h.row(b)).squaredNorm();
  return acc;
}

}  // namespace regionflow
