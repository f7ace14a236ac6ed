#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "agem/common.hpp"

namespace agem {

struct KmeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
};

namespace detail {

inline int nearest_centroid(const Matrix& points, const Matrix& centroids, int row) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (points.row(row) - centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline Matrix kmeanspp_seed(const Matrix& z, int clusters, std::mt19937_64& rng) {
  const Eigen::Index n = z.rows();
  Matrix centroids(clusters, z.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.row(0) = z.row(pick(rng));
  Vector dist2(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dist2(i) = (z.row(i) - centroids.row(0)).squaredNorm();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int c = 1; c < clusters; ++c) {
    const double total = dist2.sum();
    Eigen::Index chosen;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      double target = uni(rng) * total;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= dist2(i);
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centroids.row(c) = z.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      dist2(i) = std::min(dist2(i), (z.row(i) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace detail

/// One Lloyd run from a k-means++ seeding. Stops when assignments are stable
/// or after 300 iterations; an empty cluster is reseeded from the point
/// farthest from its assigned centroid. The optional trace receives the
/// inertia after every iteration (non-increasing).
inline KmeansResult kmeans_single(const Matrix& z, int clusters, std::uint64_t seed,
                                  std::vector<double>* inertia_trace = nullptr) {
  const Eigen::Index n = z.rows();
  if (clusters < 1 || clusters > n)
    throw std::domain_error("kmeans: clusters must be in [1, n]");
  std::mt19937_64 rng(seed);
  Matrix centroids = detail::kmeanspp_seed(z, clusters, rng);
  std::vector<int> assignment(n, -1);

  for (int iter = 0; iter < 300; ++iter) {
    std::vector<int> next(n);
    for (Eigen::Index i = 0; i < n; ++i)
      next[i] = detail::nearest_centroid(z, centroids, static_cast<int>(i));

    std::vector<long> counts(clusters, 0);
    for (int a : next) ++counts[a];
    for (int c = 0; c < clusters; ++c) {
      if (counts[c] > 0) continue;
      // farthest point from its own centroid takes over the empty cluster
      Eigen::Index far_i = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[next[i]] <= 1) continue;
        const double d = (z.row(i) - centroids.row(next[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      --counts[next[far_i]];
      next[far_i] = c;
      counts[c] = 1;
      centroids.row(c) = z.row(far_i);
    }

    centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centroids.row(next[i]) += z.row(i);
    for (int c = 0; c < clusters; ++c) centroids.row(c) /= static_cast<double>(counts[c]);

    if (inertia_trace) {
      double inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        inertia += (z.row(i) - centroids.row(next[i])).squaredNorm();
      inertia_trace->push_back(inertia);
    }
    const bool stable = next == assignment;
    assignment = std::move(next);
    if (stable) break;
  }

  KmeansResult result;
  result.assignment = std::move(assignment);
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    result.inertia += (z.row(i) - centroids.row(result.assignment[i])).squaredNorm();
  return result;
}

/// Best-of-restarts k-means by inertia. Per-restart seeds derive from the
/// master seed.
inline KmeansResult kmeans(const Matrix& z, int clusters, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw std::domain_error("kmeans: restarts must be >= 1");
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KmeansResult run = kmeans_single(z, clusters, derive_seed(seed, static_cast<std::uint64_t>(r)));
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

struct LabeledPartition {
  std::vector<int> predicted;
  std::vector<int> truth;
  int num_classes = 0;
};

namespace detail {

inline void require_valid_partition(const LabeledPartition& p) {
  if (p.predicted.size() != p.truth.size() || p.predicted.empty())
    throw std::invalid_argument("partition: vectors must be equal-length and non-empty");
  if (p.num_classes < 1) throw std::invalid_argument("partition: num_classes must be >= 1");
  for (std::size_t i = 0; i < p.predicted.size(); ++i)
    if (p.predicted[i] < 0 || p.predicted[i] >= p.num_classes || p.truth[i] < 0 ||
        p.truth[i] >= p.num_classes)
      throw std::invalid_argument("partition: id out of range");
}

inline std::vector<std::vector<long>> contingency(const LabeledPartition& p) {
  std::vector<std::vector<long>> table(
      p.num_classes, std::vector<long>(p.num_classes, 0));
  for (std::size_t i = 0; i < p.predicted.size(); ++i)
    ++table[p.predicted[i]][p.truth[i]];
  return table;
}

// Minimum-cost perfect assignment on a square cost matrix (row -> column),
// the O(n^3) potentials formulation.
inline std::vector<int> hungarian_min_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

// True when the two labelings induce the same partition (a bijection maps one
// onto the other).
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b, int classes) {
  std::vector<int> fwd(classes, -1), bwd(classes, -1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (fwd[a[i]] == -1 && bwd[b[i]] == -1) {
      fwd[a[i]] = b[i];
      bwd[b[i]] = a[i];
    } else if (fwd[a[i]] != b[i] || bwd[b[i]] != a[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/// Clustering accuracy under the optimal cluster-to-class matching.
inline double clustering_accuracy(const LabeledPartition& p) {
  detail::require_valid_partition(p);
  const auto table = detail::contingency(p);
  const int c = p.num_classes;
  Matrix cost(c, c);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) cost(i, j) = -static_cast<double>(table[i][j]);
  const auto row_to_col = detail::hungarian_min_assignment(cost);
  long matched = 0;
  for (int i = 0; i < c; ++i) matched += table[i][row_to_col[i]];
  return static_cast<double>(matched) / static_cast<double>(p.predicted.size());
}

/// Normalized mutual information with geometric-mean normalization. Returns 1
/// exactly when the partitions coincide up to relabeling, 0 when either side
/// has zero entropy while the partitions differ.
inline double nmi(const LabeledPartition& p) {
  detail::require_valid_partition(p);
  if (detail::same_partition(p.predicted, p.truth, p.num_classes)) return 1.0;
  const auto table = detail::contingency(p);
  const int c = p.num_classes;
  const double n = static_cast<double>(p.predicted.size());
  std::vector<double> row_sum(c, 0.0), col_sum(c, 0.0);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      row_sum[i] += static_cast<double>(table[i][j]);
      col_sum[j] += static_cast<double>(table[i][j]);
    }
  double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
  for (int i = 0; i < c; ++i)
    if (row_sum[i] > 0.0) h_pred -= row_sum[i] / n * std::log(row_sum[i] / n);
  for (int j = 0; j < c; ++j)
    if (col_sum[j] > 0.0) h_truth -= col_sum[j] / n * std::log(col_sum[j] / n);
  if (h_pred <= 0.0 || h_truth <= 0.0) return 0.0;
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j)
      if (table[i][j] > 0)
        mi += table[i][j] / n *
              std::log(n * table[i][j] / (row_sum[i] * col_sum[j]));
  return mi / std::sqrt(h_pred * h_truth);
}

struct TrainTestSplit {
  std::vector<int> train;
  std::vector<int> test;
  int undersized_classes = 0;  // classes too small to split; kept whole in train
};

/// Deterministic train/test split, stratified by class when labels are given.
inline TrainTestSplit split_train_test(const std::vector<int>& labels, int n,
                                       double train_fraction, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("split_train_test: n must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::domain_error("split_train_test: fraction must be in (0, 1)");
  if (!labels.empty() && static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("split_train_test: labels size mismatch");

  std::vector<std::vector<int>> strata;
  if (labels.empty()) {
    strata.emplace_back(n);
    std::iota(strata[0].begin(), strata[0].end(), 0);
  } else {
    const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
    strata.resize(classes);
    for (int i = 0; i < n; ++i) {
      if (labels[i] < 0) throw std::invalid_argument("split_train_test: negative label");
      strata[labels[i]].push_back(i);
    }
  }

  std::mt19937_64 rng(seed);
  TrainTestSplit split;
  for (auto& ids : strata) {
    if (ids.empty()) continue;
    if (ids.size() < 2) {
      split.train.insert(split.train.end(), ids.begin(), ids.end());
      ++split.undersized_classes;
      continue;
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    long take = std::lround(train_fraction * static_cast<double>(ids.size()));
    take = std::clamp<long>(take, 1, static_cast<long>(ids.size()) - 1);
    split.train.insert(split.train.end(), ids.begin(), ids.begin() + take);
    split.test.insert(split.test.end(), ids.begin() + take, ids.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

/// Macro-F1 of an L2-regularized softmax classifier trained by full-batch
/// gradient descent (500 steps, lr 0.1, penalty 1e-3). Deterministic.
inline double linear_classify_f1(const Matrix& z_train, const std::vector<int>& y_train,
                                 const Matrix& z_test, const std::vector<int>& y_test,
                                 int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("linear_classify_f1: bad class count");
  if (z_train.rows() != static_cast<Eigen::Index>(y_train.size()) ||
      z_test.rows() != static_cast<Eigen::Index>(y_test.size()) ||
      z_train.cols() != z_test.cols())
    throw std::invalid_argument("linear_classify_f1: shape mismatch");
  std::vector<char> seen(num_classes, 0);
  for (int y : y_train) {
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("linear_classify_f1: label out of range");
    seen[y] = 1;
  }
  for (int c = 0; c < num_classes; ++c)
    if (!seen[c]) throw std::domain_error("linear_classify_f1: class absent from train set");
  for (int y : y_test)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("linear_classify_f1: label out of range");

  const Eigen::Index n = z_train.rows();
  const Eigen::Index f = z_train.cols();
  Matrix w = Matrix::Zero(f, num_classes);
  Vector bias = Vector::Zero(num_classes);
  Matrix onehot = Matrix::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, y_train[i]) = 1.0;

  const double lr = 0.1, penalty = 1e-3;
  for (int step = 0; step < 500; ++step) {
    Matrix logits = z_train * w;
    logits.rowwise() += bias.transpose();
    Matrix prob = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
    prob.array().colwise() /= prob.rowwise().sum().array();
    const Matrix delta = (prob - onehot) / static_cast<double>(n);
    w -= lr * (z_train.transpose() * delta + penalty * w);
    bias -= lr * delta.colwise().sum().transpose();
  }

  std::vector<long> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (Eigen::Index i = 0; i < z_test.rows(); ++i) {
    Eigen::Index pred;
    (z_test.row(i) * w + bias.transpose()).maxCoeff(&pred);
    if (static_cast<int>(pred) == y_test[i]) {
      ++tp[y_test[i]];
    } else {
      ++fp[pred];
      ++fn[y_test[i]];
    }
  }
  double f1_sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    const long support = tp[c] + fp[c] + fn[c];
    if (support == 0) continue;
    f1_sum += 2.0 * tp[c] / static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    ++present;
  }
  return present > 0 ? f1_sum / present : 0.0;
}

struct ClusteringReport {
  double acc_mean = 0.0, acc_std = 0.0;
  double nmi_mean = 0.0, nmi_std = 0.0;
  double best_acc = 0.0, best_nmi = 0.0;  // restart with the lowest inertia
  double best_inertia = 0.0;
};

/// Repeated k-means on an embedding scored against ground-truth labels:
/// mean and sample standard deviation over restarts, plus the best-inertia
/// restart's scores.
inline ClusteringReport evaluate_clustering(const Matrix& z, const std::vector<int>& labels,
                                            int num_classes, int restarts,
                                            std::uint64_t seed) {
  if (restarts < 1) throw std::domain_error("evaluate_clustering: restarts must be >= 1");
  if (static_cast<Eigen::Index>(labels.size()) != z.rows())
    throw std::invalid_argument("evaluate_clustering: labels size mismatch");
  std::vector<double> accs, nmis;
  accs.reserve(restarts);
  nmis.reserve(restarts);
  ClusteringReport report;
  report.best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    const KmeansResult run =
        kmeans_single(z, num_classes, derive_seed(seed, static_cast<std::uint64_t>(r)));
    LabeledPartition part{run.assignment, labels, num_classes};
    const double acc = clustering_accuracy(part);
    const double info = nmi(part);
    accs.push_back(acc);
    nmis.push_back(info);
    if (run.inertia < report.best_inertia) {
      report.best_inertia = run.inertia;
      report.best_acc = acc;
      report.best_nmi = info;
    }
  }
  auto mean_of = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto std_of = [](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / static_cast<double>(v.size() - 1));
  };
  report.acc_mean = mean_of(accs);
  report.acc_std = std_of(accs, report.acc_mean);
  report.nmi_mean = mean_of(nmis);
  report.nmi_std = std_of(nmis, report.nmi_mean);
  return report;
}

}  // namespace agem
