#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "agem/common.hpp"
#include "agem/graph.hpp"

namespace agem {

// Per-row ties through rank k+1 make the closed-form denominator vanish;
// below this threshold the row falls back to uniform weights.
inline constexpr double kDegenerateRowEps = 1e-12;

/// State of the adaptive adjacency learner.
struct AdaptiveState {
  IntVector k_per_node;  // neighbor count per node; doubles as the mean of the next draw
  int k_min = 2;
  int k_max = 30;
  double gamma = 0.0;  // graph regularizer, refreshed on every adaptive step
  double alpha = 0.1;  // blend weight between learned and initial graph
  int tau = 12;        // epochs during which the graph is re-learned
};

/// All pairwise squared Euclidean distances between the rows of z.
inline Matrix pairwise_sq_dist(const Matrix& z) {
  if (!z.allFinite()) throw NumericError("pairwise_sq_dist: input has NaN/Inf");
  const Eigen::Index n = z.rows();
  const Vector sq = z.rowwise().squaredNorm();
  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
  Matrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = std::max(sq(i) + sq(j) - 2.0 * gram(i, j), 0.0);
      h(i, j) = d;
      h(j, i) = d;
    }
  }
  return h;
}

namespace detail {

// Non-self (distance, node) pairs sorted ascending; ties keep node order.
inline std::vector<std::pair<double, int>> sorted_non_self(const Vector& h_row,
                                                           int self_index) {
  std::vector<std::pair<double, int>> cand;
  cand.reserve(h_row.size() - 1);
  for (int j = 0; j < h_row.size(); ++j)
    if (j != self_index) cand.emplace_back(h_row(j), j);
  std::stable_sort(cand.begin(), cand.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return cand;
}

}  // namespace detail

/// Closed-form KKT solution of one row of the simplex-constrained graph
/// problem: the k nearest non-self nodes receive weight
/// (h_{k+1} - h_j) / (k h_{k+1} - sum_{j<=k} h_j), everything else zero.
/// The row sums to one and its support has exactly k entries when the
/// distances are distinct.
inline Vector solve_row(const Vector& h_row, int self_index, int k) {
  const int n = static_cast<int>(h_row.size());
  if (self_index < 0 || self_index >= n)
    throw std::invalid_argument("solve_row: self_index out of range");
  if (k < 1 || k > n - 2)
    throw std::domain_error("solve_row: k must be in [1, n-2]");
  if (!h_row.allFinite()) throw NumericError("solve_row: distances must be finite");
  if ((h_row.array() < 0.0).any())
    throw std::invalid_argument("solve_row: distances must be nonnegative");

  const auto cand = detail::sorted_non_self(h_row, self_index);
  double sum_k = 0.0;
  for (int j = 0; j < k; ++j) sum_k += cand[j].first;
  const double h_next = cand[k].first;  // (k+1)-th smallest non-self distance
  const double denom = static_cast<double>(k) * h_next - sum_k;

  Vector a = Vector::Zero(n);
  if (denom <= kDegenerateRowEps) {
    for (int j = 0; j < k; ++j) a(cand[j].second) = 1.0 / k;
  } else {
    for (int j = 0; j < k; ++j)
      a(cand[j].second) = std::max((h_next - cand[j].first) / denom, 0.0);
  }
  return a;
}

/// Mean over rows of (k_i/2) h_{i,k_i+1} - (1/2) sum_{j<=k_i} h_ij with each
/// row's non-self distances sorted ascending, clamped at zero.
inline double compute_gamma(const Matrix& h, const IntVector& k_per_node) {
  detail::require_square(h, "compute_gamma");
  const int n = static_cast<int>(h.rows());
  if (k_per_node.size() != n)
    throw std::invalid_argument("compute_gamma: k_per_node size mismatch");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = k_per_node(i);
    if (k < 1 || k > n - 2)
      throw std::domain_error("compute_gamma: k must be in [1, n-2]");
    const auto cand = detail::sorted_non_self(h.row(i), i);
    double sum_k = 0.0;
    for (int j = 0; j < k; ++j) sum_k += cand[j].first;
    total += 0.5 * k * cand[k].first - 0.5 * sum_k;
  }
  return std::max(total / n, 0.0);
}

/// Draws each node's neighbor count from N(mu_k_i, 1), rounds, and clamps
/// into [k_min, k_max].
inline IntVector sample_k(const IntVector& mu_k, int k_min, int k_max, std::uint64_t seed) {
  if (mu_k.size() == 0) throw std::invalid_argument("sample_k: empty input");
  if (k_min < 1 || k_min > k_max)
    throw std::domain_error("sample_k: need 1 <= k_min <= k_max");
  std::mt19937_64 rng(seed);
  IntVector k(mu_k.size());
  for (Eigen::Index i = 0; i < mu_k.size(); ++i) {
    std::normal_distribution<double> gauss(static_cast<double>(mu_k(i)), 1.0);
    const long rounded = std::lround(gauss(rng));
    k(i) = static_cast<int>(std::clamp(rounded, static_cast<long>(k_min),
                                       static_cast<long>(k_max)));
  }
  return k;
}

/// Learns a row-stochastic adjacency from embedding distances, one closed-form
/// row solve per node. Refreshes state.gamma and replaces state.k_per_node
/// with the realized support sizes.
inline Matrix learn_adjacency(const Matrix& z, AdaptiveState& state) {
  const Eigen::Index n = z.rows();
  if (state.k_per_node.size() != n)
    throw std::invalid_argument("learn_adjacency: k_per_node size mismatch");
  const Matrix h = pairwise_sq_dist(z);
  Matrix learned(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    learned.row(i) = solve_row(h.row(i), static_cast<int>(i),
                               state.k_per_node(i)).transpose();
  state.gamma = compute_gamma(h, state.k_per_node);
  for (Eigen::Index i = 0; i < n; ++i)
    state.k_per_node(i) = static_cast<int>((learned.row(i).array() > 0.0).count());
  return learned;
}

/// alpha * A_learned + (1 - alpha) * A_initial, symmetrized.
inline Matrix blend(const Matrix& a_learned, const Matrix& a_initial, double alpha) {
  if (a_learned.rows() != a_initial.rows() || a_learned.cols() != a_initial.cols())
    throw std::invalid_argument("blend: shape mismatch");
  if (alpha < 0.0 || alpha > 1.0) throw std::domain_error("blend: alpha must be in [0, 1]");
  return symmetrize(alpha * a_learned + (1.0 - alpha) * a_initial);
}

}  // namespace agem
