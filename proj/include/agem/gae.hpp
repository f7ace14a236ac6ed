#pragma once

#include <cmath>
#include <random>
#include <string>

#include "agem/common.hpp"

namespace agem {

enum class ModelKind { Bage, Vbage };

inline const char* to_string(ModelKind kind) {
  return kind == ModelKind::Vbage ? "vbage" : "bage";
}

/// Weights of the two-layer GCN encoder. w1_logvar is present only for the
/// variational model (it shares w0 with the mean branch).
struct ModelParams {
  Matrix w0;         // in_dim x hidden
  Matrix w1;         // hidden x embed (mean branch for the variational model)
  Matrix w1_logvar;  // hidden x embed, variational only

  bool variational() const { return w1_logvar.size() > 0; }
};

struct Embedding {
  Matrix z;          // n x embed latent representation
  Matrix mu;         // variational mean, empty otherwise
  Matrix log_sigma;  // variational log stddev, empty otherwise
  Matrix z1;         // hidden activation, cached for backprop
};

/// b_ij = beta where a_ij != 0, 1 elsewhere.
struct PenaltyMatrix {
  Matrix b;
  double beta = 1.0;
};

/// Glorot-uniform initialization, deterministic per seed.
inline ModelParams init_params(int in_dim, int hidden_dim, int embed_dim,
                               ModelKind kind, std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1 || embed_dim < 1)
    throw std::invalid_argument("init_params: dimensions must be positive");
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](int rows, int cols) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> uni(-limit, limit);
    Matrix w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = uni(rng);
    return w;
  };
  ModelParams p;
  p.w0 = glorot(in_dim, hidden_dim);
  p.w1 = glorot(hidden_dim, embed_dim);
  if (kind == ModelKind::Vbage) p.w1_logvar = glorot(hidden_dim, embed_dim);
  return p;
}

namespace detail {

inline void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) throw NumericError(std::string(who) + ": non-finite values");
}

inline double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// Z Z^T with exact symmetry (lower triangle computed once, then mirrored).
inline Matrix gram_matrix(const Matrix& z) {
  const Eigen::Index n = z.rows();
  Matrix s = Matrix::Zero(n, n);
  s.selfadjointView<Eigen::Lower>().rankUpdate(z);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) s(j, i) = s(i, j);
  return s;
}

}  // namespace detail

/// Two-layer spectral GCN: Z1 = relu(N X W0), Z = N Z1 W1 with a linear
/// second layer, N the normalized adjacency operator.
inline Embedding encode(const Matrix& x, const Matrix& a_norm, const ModelParams& params) {
  if (x.cols() != params.w0.rows() || params.w0.cols() != params.w1.rows() ||
      a_norm.rows() != a_norm.cols() || a_norm.rows() != x.rows())
    throw std::invalid_argument("encode: shape mismatch");
  Embedding e;
  e.z1 = (a_norm * (x * params.w0)).cwiseMax(0.0);
  e.z = a_norm * (e.z1 * params.w1);
  detail::require_finite(e.z, "encode");
  return e;
}

/// Variational encoder. The mean branch is the plain encoder; the log-sigma
/// branch shares Z1 (hence W0). z = mu + exp(log_sigma) .* noise, so zero
/// noise gives the deterministic evaluation embedding z = mu.
inline Embedding encode_variational(const Matrix& x, const Matrix& a_norm,
                                    const ModelParams& params, const Matrix& noise) {
  if (!params.variational())
    throw std::invalid_argument("encode_variational: params lack w1_logvar");
  Embedding e = encode(x, a_norm, params);
  e.mu = e.z;
  e.log_sigma = a_norm * (e.z1 * params.w1_logvar);
  if (noise.rows() != e.mu.rows() || noise.cols() != e.mu.cols())
    throw std::invalid_argument("encode_variational: noise shape mismatch");
  e.z = e.mu + e.log_sigma.array().exp().matrix().cwiseProduct(noise);
  detail::require_finite(e.z, "encode_variational");
  return e;
}

/// Inner-product decoder: sigmoid(Z Z^T). Symmetric, entries in (0, 1).
inline Matrix decode(const Matrix& z) {
  detail::require_finite(z, "decode");
  Matrix s = detail::gram_matrix(z);
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = detail::stable_sigmoid(s(i, j));
  return s;
}

inline PenaltyMatrix penalty_matrix(const Matrix& a, double beta) {
  if (beta < 1.0) throw std::domain_error("penalty_matrix: beta must be >= 1");
  PenaltyMatrix p;
  p.beta = beta;
  p.b = (a.array() > 1e-12).select(Matrix::Constant(a.rows(), a.cols(), beta),
                                   Matrix::Ones(a.rows(), a.cols()));
  return p;
}

/// || (A - A_hat) .* B ||_F^2
inline double loss_recon(const Matrix& a, const Matrix& a_hat, const PenaltyMatrix& penalty) {
  if (a.rows() != a_hat.rows() || a.cols() != a_hat.cols() ||
      a.rows() != penalty.b.rows() || a.cols() != penalty.b.cols())
    throw std::invalid_argument("loss_recon: shape mismatch");
  return ((a - a_hat).cwiseProduct(penalty.b)).squaredNorm();
}

/// KL divergence of the per-node Gaussian posterior from the standard normal
/// prior: 1/2 sum(mu^2 + sigma^2 - 1 - 2 log sigma). Nonnegative.
inline double kl_divergence(const Matrix& mu, const Matrix& log_sigma) {
  detail::require_finite(mu, "kl_divergence");
  detail::require_finite(log_sigma, "kl_divergence");
  const auto two_ls = 2.0 * log_sigma.array();
  if ((two_ls > 700.0).any()) throw NumericError("kl_divergence: exp overflow");
  return 0.5 * (mu.array().square() + two_ls.exp() - 1.0 - two_ls).sum();
}

/// sum_ij a_ij ||z_i - z_j||^2 + gamma ||A||_F^2, the first term computed as
/// 2 tr(Z^T L Z).
inline double loss_laplacian(const Matrix& z, const Matrix& lap, const Matrix& a,
                             double gamma) {
  if (lap.rows() != lap.cols() || lap.rows() != z.rows() || a.rows() != lap.rows() ||
      a.cols() != lap.cols())
    throw std::invalid_argument("loss_laplacian: shape mismatch");
  const double trace_term = 2.0 * (lap * z).cwiseProduct(z).sum();
  return trace_term + gamma * a.squaredNorm();
}

/// (nu/2) sum_i ||W_i||_F^2 over all weight matrices.
inline double loss_l2(const ModelParams& params, double nu) {
  if (nu < 0.0) throw std::domain_error("loss_l2: nu must be >= 0");
  double sq = params.w0.squaredNorm() + params.w1.squaredNorm();
  if (params.variational()) sq += params.w1_logvar.squaredNorm();
  return 0.5 * nu * sq;
}

struct LossParts {
  double recon = 0.0;
  double kl = 0.0;
  double laplacian = 0.0;
  double l2 = 0.0;
};

inline double total_loss(ModelKind kind, const LossParts& parts, double lambda) {
  double total = parts.recon + lambda * parts.laplacian + parts.l2;
  if (kind == ModelKind::Vbage) total += parts.kl;
  return total;
}

}  // namespace agem
