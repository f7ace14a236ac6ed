#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "agem/adaptive.hpp"
#include "agem/common.hpp"
#include "agem/gae.hpp"
#include "agem/graph.hpp"

namespace agem {

struct TrainConfig {
  ModelKind model_kind = ModelKind::Bage;
  int epochs = 200;
  double lr = 1e-4;
  double lambda = 0.01;  // Laplacian embedding coefficient
  double nu = 1e-4;      // L2 coefficient
  double beta = 20.0;    // reconstruction penalty on edges
  double alpha = 0.1;    // blend weight
  int tau = 12;          // adaptive-update horizon
  int k_init = 10;
  int k_min = 2;
  int k_max = 30;
  int hidden_dim = 32;
  int embed_dim = 16;
  std::uint64_t seed = 0;

  static TrainConfig defaults(ModelKind kind) {
    TrainConfig c;
    c.model_kind = kind;
    c.lr = kind == ModelKind::Vbage ? 1e-3 : 1e-4;
    return c;
  }
};

inline void validate_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("config: lr must be > 0");
  if (cfg.lambda < 0.0 || cfg.nu < 0.0) throw ConfigError("config: coefficients must be >= 0");
  if (cfg.beta < 1.0) throw ConfigError("config: beta must be >= 1");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw ConfigError("config: alpha must be in [0, 1]");
  if (cfg.tau < 0 || cfg.tau > cfg.epochs) throw ConfigError("config: need 0 <= tau <= epochs");
  if (cfg.k_min < 1 || cfg.k_min > cfg.k_max) throw ConfigError("config: need 1 <= k_min <= k_max");
  if (cfg.k_init < cfg.k_min || cfg.k_init > cfg.k_max)
    throw ConfigError("config: k_init must be within [k_min, k_max]");
  if (cfg.hidden_dim < 1 || cfg.embed_dim < 1)
    throw ConfigError("config: layer widths must be positive");
}

struct AdamState {
  Matrix m_w0, v_w0, m_w1, v_w1, m_w1lv, v_w1lv;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const ModelParams& p) {
    AdamState s;
    s.m_w0 = Matrix::Zero(p.w0.rows(), p.w0.cols());
    s.v_w0 = s.m_w0;
    s.m_w1 = Matrix::Zero(p.w1.rows(), p.w1.cols());
    s.v_w1 = s.m_w1;
    if (p.variational()) {
      s.m_w1lv = Matrix::Zero(p.w1_logvar.rows(), p.w1_logvar.cols());
      s.v_w1lv = s.m_w1lv;
    }
    return s;
  }
};

struct Gradients {
  Matrix w0, w1, w1_logvar;
};

/// Total-loss gradients for the two-layer architecture, by hand-derived chain
/// rule through decoder, Laplacian trace term, KL, reparameterized noise, relu
/// and the normalized-adjacency products. The adjacency is a constant input;
/// no gradient flows into it.
inline Gradients backward(const Matrix& x, const GraphState& graph,
                          const PenaltyMatrix& penalty, const ModelParams& params,
                          const Embedding& emb, const TrainConfig& cfg,
                          const Matrix& noise) {
  const bool variational = cfg.model_kind == ModelKind::Vbage;
  if (variational && !params.variational())
    throw std::invalid_argument("backward: variational config without w1_logvar");
  const Matrix& n_op = graph.a_norm;

  // d/dS of ||(A - sigmoid(S)) .* B||_F^2 at S = Z Z^T
  const Matrix a_hat = decode(emb.z);
  const Matrix err = (graph.a - a_hat).cwiseProduct(penalty.b);
  const Matrix g_s = (-2.0 * penalty.b.cwiseProduct(err))
                         .cwiseProduct(a_hat.cwiseProduct((1.0 - a_hat.array()).matrix()));
  // G_S is symmetric, so d/dZ tr(G_S^T Z Z^T) collapses to 2 G_S Z; the
  // Laplacian term 2 lambda tr(Z^T L Z) adds 4 lambda L Z.
  Matrix g_z = 2.0 * (g_s * emb.z) + (4.0 * cfg.lambda) * (graph.laplacian * emb.z);

  Gradients g;
  Matrix g_z1;
  if (variational) {
    const Matrix sigma = emb.log_sigma.array().exp().matrix();
    const Matrix g_mu = g_z + emb.mu;  // dKL/dmu = mu
    const Matrix g_log_sigma =
        g_z.cwiseProduct(sigma.cwiseProduct(noise)) +
        ((2.0 * emb.log_sigma.array()).exp() - 1.0).matrix();  // dKL/dlogsig
    const Matrix t_mu = n_op * g_mu;
    const Matrix t_ls = n_op * g_log_sigma;
    g.w1 = emb.z1.transpose() * t_mu;
    g.w1_logvar = emb.z1.transpose() * t_ls;
    g_z1 = t_mu * params.w1.transpose() + t_ls * params.w1_logvar.transpose();
  } else {
    const Matrix t = n_op * g_z;
    g.w1 = emb.z1.transpose() * t;
    g_z1 = t * params.w1.transpose();
  }

  // relu subgradient: zero where the hidden pre-activation was clamped
  const Matrix g_p1 = (emb.z1.array() > 0.0).select(g_z1, Matrix::Zero(g_z1.rows(), g_z1.cols()));
  g.w0 = x.transpose() * (n_op * g_p1);

  g.w0 += cfg.nu * params.w0;
  g.w1 += cfg.nu * params.w1;
  if (variational) g.w1_logvar += cfg.nu * params.w1_logvar;

  if (!g.w0.allFinite() || !g.w1.allFinite() ||
      (variational && !g.w1_logvar.allFinite()))
    throw NumericError("backward: non-finite gradients");
  return g;
}

/// One Adam update with bias correction.
inline void adam_step(ModelParams& params, const Gradients& grads, AdamState& s, double lr) {
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  auto update = [&](Matrix& w, const Matrix& g, Matrix& m, Matrix& v) {
    if (w.rows() != g.rows() || w.cols() != g.cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.eps);
  };
  update(params.w0, grads.w0, s.m_w0, s.v_w0);
  update(params.w1, grads.w1, s.m_w1, s.v_w1);
  if (params.variational()) update(params.w1_logvar, grads.w1_logvar, s.m_w1lv, s.v_w1lv);
}

struct TrainResult {
  ModelParams params;
  Embedding embedding;  // deterministic evaluation embedding (z = mu for vbage)
  GraphState graph;
  AdaptiveState adaptive;
  std::vector<double> loss_trace;
};

namespace detail {

inline constexpr std::uint64_t kSeedWeights = 0x57A7;
inline constexpr std::uint64_t kSeedNoise = 0xA11CE;
inline constexpr std::uint64_t kSeedKDraw = 0x6B00;

inline Matrix draw_standard_normal(std::mt19937_64& rng, Eigen::Index rows,
                                   Eigen::Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = gauss(rng);
  return out;
}

inline void require_zero_diagonal(const Matrix& a, const char* who) {
  if (a.diagonal().cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument(std::string(who) + ": adjacency diagonal must be zero");
}

}  // namespace detail

/// Full training loop. With an initial graph, epoch 1 runs on it unchanged and
/// adaptive updates use the previous epoch's embedding at epochs 2..tau; after
/// tau the graph is frozen. Without a graph, the adjacency is first learned
/// from raw-feature distances and that matrix also serves as A0 for blending.
inline TrainResult train(const Matrix& x, const std::optional<Matrix>& initial_graph,
                         const TrainConfig& cfg) {
  validate_config(cfg);
  if (!x.allFinite()) throw NumericError("train: features contain NaN/Inf");
  const Eigen::Index n = x.rows();
  if (n < 3) throw ConfigError("train: need at least 3 nodes");
  const bool variational = cfg.model_kind == ModelKind::Vbage;

  const int k_cap = static_cast<int>(n) - 2;
  const int k_max_eff = std::min(cfg.k_max, k_cap);
  const int k_min_eff = std::min(cfg.k_min, k_max_eff);
  const int k_init_eff = std::clamp(cfg.k_init, k_min_eff, k_max_eff);

  AdaptiveState adaptive;
  adaptive.k_per_node = IntVector::Constant(n, k_init_eff);
  adaptive.k_min = k_min_eff;
  adaptive.k_max = k_max_eff;
  adaptive.alpha = cfg.alpha;
  adaptive.tau = cfg.tau;

  GraphState graph;
  if (initial_graph.has_value()) {
    if (initial_graph->rows() != n || initial_graph->cols() != n)
      throw std::invalid_argument("train: initial graph shape mismatch");
    detail::require_zero_diagonal(*initial_graph, "train");
    graph.a0 = *initial_graph;
    graph.set_adjacency(graph.a0);
  } else {
    const Matrix learned = learn_adjacency(x, adaptive);
    graph.a0 = symmetrize(learned);
    graph.set_adjacency(graph.a0);
  }
  PenaltyMatrix penalty = penalty_matrix(graph.a, cfg.beta);

  ModelParams params =
      init_params(static_cast<int>(x.cols()), cfg.hidden_dim, cfg.embed_dim,
                  cfg.model_kind, derive_seed(cfg.seed, detail::kSeedWeights));
  AdamState adam = AdamState::like(params);
  std::mt19937_64 noise_rng(derive_seed(cfg.seed, detail::kSeedNoise));

  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  Embedding emb;
  bool have_embedding = false;
  Matrix noise;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (epoch <= cfg.tau && have_embedding) {
      adaptive.k_per_node =
          sample_k(adaptive.k_per_node, k_min_eff, k_max_eff,
                   derive_seed(cfg.seed, detail::kSeedKDraw + static_cast<std::uint64_t>(epoch)));
      const Matrix learned = learn_adjacency(emb.z, adaptive);
      graph.set_adjacency(blend(learned, graph.a0, cfg.alpha));
      penalty = penalty_matrix(graph.a, cfg.beta);
    }

    if (variational) {
      noise = detail::draw_standard_normal(noise_rng, n, cfg.embed_dim);
      emb = encode_variational(x, graph.a_norm, params, noise);
    } else {
      emb = encode(x, graph.a_norm, params);
    }
    have_embedding = true;

    LossParts parts;
    parts.recon = loss_recon(graph.a, decode(emb.z), penalty);
    parts.laplacian = loss_laplacian(emb.z, graph.laplacian, graph.a, adaptive.gamma);
    if (variational) parts.kl = kl_divergence(emb.mu, emb.log_sigma);
    parts.l2 = loss_l2(params, cfg.nu);
    const double total = total_loss(cfg.model_kind, parts, cfg.lambda);
    if (!std::isfinite(total) || total > 1e12)
      throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
    trace.push_back(total);

    const Gradients grads = backward(x, graph, penalty, params, emb, cfg, noise);
    adam_step(params, grads, adam, cfg.lr);
    if (!params.w0.allFinite() || !params.w1.allFinite() ||
        (variational && !params.w1_logvar.allFinite()))
      throw NumericError("train: non-finite weights at epoch " + std::to_string(epoch));
  }

  TrainResult result;
  result.embedding =
      variational
          ? encode_variational(x, graph.a_norm, params, Matrix::Zero(n, cfg.embed_dim))
          : encode(x, graph.a_norm, params);
  result.params = std::move(params);
  result.graph = std::move(graph);
  result.adaptive = std::move(adaptive);
  result.loss_trace = std::move(trace);
  return result;
}

/// Compares backward() against central finite differences over every weight
/// entry on a small random instance; returns the max relative error. The
/// instance is re-seeded until the hidden pre-activations are clear of the
/// relu kink, where a finite-difference probe is meaningless.
inline double gradient_check(const TrainConfig& cfg, int n, int in_dim, int hidden_dim,
                             int embed_dim) {
  if (n > 16) throw std::domain_error("gradient_check: instance must have n <= 16");
  if (n < 4) throw std::domain_error("gradient_check: instance must have n >= 4");
  const bool variational = cfg.model_kind == ModelKind::Vbage;

  Matrix x, noise;
  GraphState graph;
  ModelParams params;
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 64 && !found; ++attempt) {
    const std::uint64_t seed = derive_seed(cfg.seed, 0xFD00 + attempt);
    std::mt19937_64 rng(seed);
    x = detail::draw_standard_normal(rng, n, in_dim);
    Matrix a = Matrix::Zero(n, n);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (uni(rng) < 0.4) a(i, j) = a(j, i) = 1.0;
    params = init_params(in_dim, hidden_dim, embed_dim, cfg.model_kind,
                         derive_seed(seed, 1));
    noise = variational ? detail::draw_standard_normal(rng, n, embed_dim)
                        : Matrix::Zero(n, embed_dim);
    graph = GraphState::from_initial(std::move(a));
    const Matrix pre1 = graph.a_norm * (x * params.w0);
    if (pre1.cwiseAbs().minCoeff() > 1e-3) found = true;
  }
  if (!found) throw NumericError("gradient_check: no kink-free instance found");

  const PenaltyMatrix penalty = penalty_matrix(graph.a, cfg.beta);
  auto loss_at = [&](const ModelParams& p) {
    const Embedding e = variational ? encode_variational(x, graph.a_norm, p, noise)
                                    : encode(x, graph.a_norm, p);
    LossParts parts;
    parts.recon = loss_recon(graph.a, decode(e.z), penalty);
    parts.laplacian = loss_laplacian(e.z, graph.laplacian, graph.a, 0.0);
    if (variational) parts.kl = kl_divergence(e.mu, e.log_sigma);
    parts.l2 = loss_l2(p, cfg.nu);
    return total_loss(cfg.model_kind, parts, cfg.lambda);
  };

  const Embedding emb = variational
                            ? encode_variational(x, graph.a_norm, params, noise)
                            : encode(x, graph.a_norm, params);
  const Gradients grads = backward(x, graph, penalty, params, emb, cfg, noise);

  const double step = 1e-5;
  double max_rel = 0.0;
  auto check_matrix = [&](Matrix& w, const Matrix& g) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double orig = w(i, j);
        w(i, j) = orig + step;
        const double up = loss_at(params);
        w(i, j) = orig - step;
        const double down = loss_at(params);
        w(i, j) = orig;
        const double fd = (up - down) / (2.0 * step);
        const double rel = std::abs(g(i, j) - fd) /
                           std::max({std::abs(g(i, j)), std::abs(fd), 1e-3});
        max_rel = std::max(max_rel, rel);
      }
    }
  };
  check_matrix(params.w0, grads.w0);
  check_matrix(params.w1, grads.w1);
  if (variational) check_matrix(params.w1_logvar, grads.w1_logvar);
  return max_rel;
}

}  // namespace agem
