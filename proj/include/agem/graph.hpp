#pragma once

#include <cmath>
#include <random>
#include <utility>

#include "agem/common.hpp"

namespace agem {

namespace detail {

inline void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw std::invalid_argument(std::string(who) + ": matrix must be square");
}

inline void require_symmetric(const Matrix& a, const char* who, double tol = 1e-9) {
  require_square(a, who);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol)
        throw std::invalid_argument(std::string(who) + ": matrix must be symmetric");
}

inline void require_nonnegative(const Matrix& a, const char* who) {
  if ((a.array() < 0.0).any())
    throw std::invalid_argument(std::string(who) + ": entries must be nonnegative");
}

}  // namespace detail

/// Spectral GCN operator D^{-1/2} (A + I) D^{-1/2}, where D is the degree
/// matrix of A + I. Self-connection enters here only; A itself keeps a zero
/// diagonal.
inline Matrix normalize_adjacency(const Matrix& a) {
  detail::require_symmetric(a, "normalize_adjacency");
  detail::require_nonnegative(a, "normalize_adjacency");
  const Eigen::Index n = a.rows();
  Vector inv_sqrt_deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = a.row(i).sum() + 1.0;  // A + I, so deg >= 1
    inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
  }
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = (a(i, i) + 1.0) * inv_sqrt_deg(i) * inv_sqrt_deg(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = a(i, j) * inv_sqrt_deg(i) * inv_sqrt_deg(j);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

/// Unnormalized graph Laplacian L = D - A. Rows sum to zero.
inline Matrix laplacian(const Matrix& a) {
  detail::require_symmetric(a, "laplacian");
  Matrix l = -a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) l(i, i) = a.row(i).sum() - a(i, i);
  return l;
}

/// (A + A^T)/2 with the diagonal forced to zero.
inline Matrix symmetrize(const Matrix& a) {
  detail::require_square(a, "symmetrize");
  detail::require_nonnegative(a, "symmetrize");
  Matrix out = 0.5 * (a + a.transpose());
  out.diagonal().setZero();
  return out;
}

/// Independently deletes each undirected edge of a binary graph with
/// probability missing_ratio, then mirrors the upper triangle so the result
/// stays symmetric. Never adds edges.
inline Matrix perturb_edges(const Matrix& a0, double missing_ratio, std::uint64_t seed) {
  detail::require_symmetric(a0, "perturb_edges");
  if (missing_ratio < 0.0 || missing_ratio > 1.0)
    throw std::domain_error("perturb_edges: missing_ratio must be in [0, 1]");
  for (Eigen::Index i = 0; i < a0.rows(); ++i)
    for (Eigen::Index j = 0; j < a0.cols(); ++j)
      if (std::abs(a0(i, j)) > 1e-9 && std::abs(a0(i, j) - 1.0) > 1e-9)
        throw std::invalid_argument("perturb_edges: adjacency must be binary");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix out = a0;
  out.diagonal().setZero();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < out.cols(); ++j) {
      if (out(i, j) > 0.5 && uni(rng) < missing_ratio) {
        out(i, j) = 0.0;
        out(j, i) = 0.0;
      }
    }
  }
  return out;
}

/// Number of undirected edges (upper-triangle nonzeros).
inline long count_edges(const Matrix& a) {
  detail::require_square(a, "count_edges");
  long edges = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (a(i, j) > 1e-12) ++edges;
  return edges;
}

/// Current adjacency plus the operators derived from it. a_norm and the
/// Laplacian are rebuilt whenever the adjacency changes.
struct GraphState {
  Matrix a0;         // initial adjacency
  Matrix a;          // current adjacency
  Matrix a_norm;     // D^{-1/2} (A + I) D^{-1/2}
  Matrix laplacian;  // D - A

  Eigen::Index n() const { return a.rows(); }

  void set_adjacency(Matrix next) {
    a = std::move(next);
    a_norm = normalize_adjacency(a);
    laplacian = agem::laplacian(a);
  }

  static GraphState from_initial(Matrix initial) {
    GraphState g;
    g.a0 = initial;
    g.set_adjacency(std::move(initial));
    return g;
  }
};

}  // namespace agem
