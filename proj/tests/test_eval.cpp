#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "agem/eval.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using agem::LabeledPartition;
using agem::Matrix;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<int> random_ids(int n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> ids(n);
  for (int& id : ids) id = pick(rng);
  return ids;
}

}  // namespace

TEST_CASE("kmeans with one cluster reports the variance about the mean") {
  const synth::Blobs blobs = synth::make_blobs(30, 3, 1, 0.0, 5);
  const agem::KmeansResult r = agem::kmeans(blobs.features, 1, 3, 11);
  for (int a : r.assignment) REQUIRE(a == 0);
  const Eigen::RowVectorXd mean = blobs.features.colwise().mean();
  double variance = 0.0;
  for (int i = 0; i < 30; ++i)
    variance += (blobs.features.row(i) - mean).squaredNorm();
  REQUIRE_THAT(r.inertia, WithinAbs(variance, 1e-9));
}

TEST_CASE("kmeans separates distant clouds perfectly") {
  const synth::Blobs blobs = synth::make_blobs(60, 4, 2, 50.0, 6);
  const agem::KmeansResult r = agem::kmeans(blobs.features, 2, 5, 23);
  LabeledPartition p{r.assignment, blobs.labels, 2};
  REQUIRE(agem::clustering_accuracy(p) == 1.0);

  // inertia equals the summed within-cloud variance
  double expected = 0.0;
  for (int c = 0; c < 2; ++c) {
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(4);
    int count = 0;
    for (int i = 0; i < 60; ++i)
      if (blobs.labels[i] == c) {
        centroid += blobs.features.row(i);
        ++count;
      }
    centroid /= count;
    for (int i = 0; i < 60; ++i)
      if (blobs.labels[i] == c)
        expected += (blobs.features.row(i) - centroid).squaredNorm();
  }
  REQUIRE_THAT(r.inertia, WithinAbs(expected, 1e-9));
}

TEST_CASE("kmeans saturates and validates its arguments") {
  const synth::Blobs blobs = synth::make_blobs(12, 3, 3, 8.0, 7);
  const agem::KmeansResult r = agem::kmeans(blobs.features, 12, 4, 3);
  REQUIRE_THAT(r.inertia, WithinAbs(0.0, 1e-12));
  REQUIRE_THROWS_AS(agem::kmeans(blobs.features, 13, 1, 3), std::domain_error);
}

TEST_CASE("kmeans inertia never increases within a run") {
  const synth::Blobs blobs = synth::make_blobs(80, 5, 4, 3.0, 9);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    std::vector<double> trace;
    agem::kmeans_single(blobs.features, 4, seed, &trace);
    for (std::size_t t = 1; t < trace.size(); ++t)
      REQUIRE(trace[t] <= trace[t - 1] + 1e-9);
  }
}

TEST_CASE("clustering accuracy identities") {
  std::vector<int> truth{0, 1, 2, 0, 1, 2, 0};
  REQUIRE(agem::clustering_accuracy({truth, truth, 3}) == 1.0);

  // relabeling the predictions does not change the score
  std::vector<int> permuted(truth.size());
  const int perm[3] = {2, 0, 1};
  for (std::size_t i = 0; i < truth.size(); ++i) permuted[i] = perm[truth[i]];
  REQUIRE(agem::clustering_accuracy({permuted, truth, 3}) == 1.0);

  std::vector<int> out_of_range{0, 3};
  REQUIRE_THROWS_AS(agem::clustering_accuracy({out_of_range, {0, 1}, 2}),
                    std::invalid_argument);
}

TEST_CASE("clustering accuracy equals the factorial brute force") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> pick_n(2, 12);
  std::uniform_int_distribution<int> pick_c(2, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = pick_n(rng);
    const int classes = pick_c(rng);
    const std::vector<int> pred = random_ids(n, classes, rng);
    const std::vector<int> truth = random_ids(n, classes, rng);
    const double fast = agem::clustering_accuracy({pred, truth, classes});
    const double brute = oracle::accuracy_brute(pred, truth, classes);
    REQUIRE_THAT(fast, WithinAbs(brute, 1e-12));
  }
}

TEST_CASE("single-cluster prediction scores at least the majority class") {
  std::mt19937_64 rng(14);
  const std::vector<int> truth = random_ids(40, 4, rng);
  const std::vector<int> pred(40, 0);
  std::vector<int> counts(4, 0);
  for (int t : truth) ++counts[t];
  const double majority = *std::max_element(counts.begin(), counts.end()) / 40.0;
  REQUIRE(agem::clustering_accuracy({pred, truth, 4}) >= majority - 1e-12);
}

TEST_CASE("nmi identities") {
  std::vector<int> truth{0, 0, 1, 1, 2, 2};
  REQUIRE(agem::nmi({truth, truth, 3}) == 1.0);

  std::vector<int> relabeled{1, 1, 2, 2, 0, 0};
  REQUIRE_THAT(agem::nmi({relabeled, truth, 3}), WithinAbs(1.0, 1e-12));

  // a single cluster carries no information about a balanced 2-class truth
  std::vector<int> single(6, 0);
  std::vector<int> balanced{0, 1, 0, 1, 0, 1};
  REQUIRE(agem::nmi({single, balanced, 2}) == 0.0);
}

TEST_CASE("nmi matches the direct definition on a hand contingency") {
  // contingency [[5,1],[1,5]]
  std::vector<int> pred, truth;
  for (int i = 0; i < 5; ++i) { pred.push_back(0); truth.push_back(0); }
  pred.push_back(0); truth.push_back(1);
  pred.push_back(1); truth.push_back(0);
  for (int i = 0; i < 5; ++i) { pred.push_back(1); truth.push_back(1); }
  const double direct = oracle::nmi_direct(pred, truth, 2);
  REQUIRE_THAT(agem::nmi({pred, truth, 2}), WithinAbs(direct, 1e-12));
  REQUIRE(direct > 0.0);
  REQUIRE(direct < 1.0);
}

TEST_CASE("nmi is symmetric") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + trial % 30;
    const int classes = 2 + trial % 5;
    const std::vector<int> a = random_ids(n, classes, rng);
    const std::vector<int> b = random_ids(n, classes, rng);
    REQUIRE_THAT(agem::nmi({a, b, classes}), WithinAbs(agem::nmi({b, a, classes}), 1e-12));
  }
}

TEST_CASE("train/test split stratifies and reproduces per seed") {
  const agem::TrainTestSplit single =
      agem::split_train_test(std::vector<int>(10, 0), 10, 0.7, 1);
  REQUIRE(single.train.size() == 7);
  REQUIRE(single.test.size() == 3);

  std::vector<int> two_classes;
  for (int i = 0; i < 20; ++i) two_classes.push_back(i % 2);
  const agem::TrainTestSplit split = agem::split_train_test(two_classes, 20, 0.7, 2);
  REQUIRE(split.train.size() == 14);
  REQUIRE(split.test.size() == 6);
  int train_zero = 0;
  for (int id : split.train) train_zero += two_classes[id] == 0 ? 1 : 0;
  REQUIRE(train_zero == 7);

  const agem::TrainTestSplit again = agem::split_train_test(two_classes, 20, 0.7, 2);
  REQUIRE(split.train == again.train);
  REQUIRE(split.test == again.test);

  // disjoint and covering
  std::vector<char> seen(20, 0);
  for (int id : split.train) seen[id] += 1;
  for (int id : split.test) seen[id] += 1;
  for (char s : seen) REQUIRE(s == 1);
}

TEST_CASE("undersized classes fall into the training side") {
  std::vector<int> labels{0, 0, 0, 0, 1};
  const agem::TrainTestSplit split = agem::split_train_test(labels, 5, 0.7, 3);
  REQUIRE(split.undersized_classes == 1);
  REQUIRE(std::find(split.train.begin(), split.train.end(), 4) != split.train.end());
  REQUIRE(split.test.size() == 1);
}

TEST_CASE("linear classifier reaches F1 = 1 on widely separated classes") {
  const synth::Blobs blobs = synth::make_blobs(80, 6, 2, 30.0, 21);
  const agem::TrainTestSplit split = agem::split_train_test(blobs.labels, 80, 0.7, 4);
  Matrix z_train(split.train.size(), 6), z_test(split.test.size(), 6);
  std::vector<int> y_train, y_test;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    z_train.row(i) = blobs.features.row(split.train[i]);
    y_train.push_back(blobs.labels[split.train[i]]);
  }
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    z_test.row(i) = blobs.features.row(split.test[i]);
    y_test.push_back(blobs.labels[split.test[i]]);
  }
  REQUIRE(agem::linear_classify_f1(z_train, y_train, z_test, y_test, 2) == 1.0);
}

TEST_CASE("linear classifier degenerate cases") {
  Matrix z(4, 2);
  z << 1, 0, 2, 0, 3, 0, 4, 0;
  const std::vector<int> ones{0, 0, 0, 0};
  REQUIRE(agem::linear_classify_f1(z, ones, z, ones, 1) == 1.0);

  // uniformly wrong predictions on balanced binary data
  Matrix train(4, 1), test(2, 1);
  train << -2, -1, 1, 2;
  test << 3, -3;  // classifier will call these 1 and 0
  const std::vector<int> y_train{0, 0, 1, 1};
  const std::vector<int> y_test{0, 1};  // labels flipped on purpose
  REQUIRE(agem::linear_classify_f1(train, y_train, test, y_test, 2) == 0.0);

  const std::vector<int> missing{0, 0, 0, 0};
  REQUIRE_THROWS_AS(agem::linear_classify_f1(train, missing, test, y_test, 2),
                    std::domain_error);
}

TEST_CASE("evaluate_clustering reports stable statistics") {
  const synth::Blobs blobs = synth::make_blobs(90, 5, 3, 40.0, 31);
  const agem::ClusteringReport rep =
      agem::evaluate_clustering(blobs.features, blobs.labels, 3, 10, 77);
  REQUIRE(rep.acc_mean == 1.0);
  REQUIRE(rep.acc_std == 0.0);
  REQUIRE(rep.nmi_mean == 1.0);
  REQUIRE(rep.best_acc == 1.0);

  const agem::ClusteringReport again =
      agem::evaluate_clustering(blobs.features, blobs.labels, 3, 10, 77);
  REQUIRE(rep.acc_mean == again.acc_mean);
  REQUIRE(rep.best_inertia == again.best_inertia);
}
