#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "agem/common.hpp"
#include "agem/dataset.hpp"
#include "agem/eval.hpp"
#include "agem/train.hpp"

namespace agem {

struct ExperimentResult {
  std::string dataset;
  ModelKind model_kind = ModelKind::Bage;
  double missing_ratio = 0.0;
  TrainConfig config;  // exact snapshot; re-running it reproduces the metrics
  int restarts = 10;
  double acc_mean = std::nan("");
  double acc_std = std::nan("");
  double nmi_mean = std::nan("");
  double nmi_std = std::nan("");
  double f1 = std::nan("");
  std::vector<double> loss_trace;
  double seconds = 0.0;
  std::string run_id;
};

namespace detail {

inline constexpr std::uint64_t kSeedPerturb = 0x9E47;
inline constexpr std::uint64_t kSeedKmeans = 0x52E5;
inline constexpr std::uint64_t kSeedSplit = 0x5714;

inline std::string config_snapshot(const Dataset& ds, const TrainConfig& cfg,
                                   double missing_ratio, int restarts) {
  std::ostringstream s;
  s << ds.name << '|' << to_string(cfg.model_kind) << '|' << format_g17(missing_ratio)
    << '|' << cfg.epochs << '|' << format_g17(cfg.lr) << '|' << format_g17(cfg.lambda)
    << '|' << format_g17(cfg.nu) << '|' << format_g17(cfg.beta) << '|'
    << format_g17(cfg.alpha) << '|' << cfg.tau << '|' << cfg.k_init << '|' << cfg.k_min
    << '|' << cfg.k_max << '|' << cfg.hidden_dim << '|' << cfg.embed_dim << '|'
    << cfg.seed << '|' << restarts;
  return s.str();
}

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

}  // namespace detail

inline std::string run_id_for(const Dataset& ds, const TrainConfig& cfg,
                              double missing_ratio, int restarts) {
  std::ostringstream s;
  s << ds.name << '_' << to_string(cfg.model_kind) << "_mr"
    << detail::format_g17(missing_ratio * 100.0) << "_s" << cfg.seed << '_'
    << detail::fnv1a_hex(detail::config_snapshot(ds, cfg, missing_ratio, restarts));
  return s.str();
}

inline const char* results_csv_header() {
  return "dataset,model,ratio,lambda,beta,alpha,tau,seed,acc_mean,acc_std,"
         "nmi_mean,nmi_std,f1,seconds";
}

inline std::string results_csv_row(const ExperimentResult& r) {
  std::ostringstream s;
  s << r.dataset << ',' << to_string(r.model_kind) << ','
    << detail::format_g17(r.missing_ratio) << ',' << detail::format_g17(r.config.lambda)
    << ',' << detail::format_g17(r.config.beta) << ','
    << detail::format_g17(r.config.alpha) << ',' << r.config.tau << ',' << r.config.seed
    << ',' << detail::format_g17(r.acc_mean) << ',' << detail::format_g17(r.acc_std)
    << ',' << detail::format_g17(r.nmi_mean) << ',' << detail::format_g17(r.nmi_std)
    << ',' << detail::format_g17(r.f1) << ',' << detail::format_g17(r.seconds);
  return s.str();
}

inline void append_results_csv(const std::filesystem::path& path,
                               const std::vector<ExperimentResult>& results) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot write " + path.string());
  if (fresh) out << results_csv_header() << '\n';
  for (const auto& r : results) out << results_csv_row(r) << '\n';
}

/// Corrupts the graph (when requested), trains, evaluates clustering and,
/// when labels exist, classification on a stratified 70/30 split. Writes
/// embedding_<runid>.csv and loss_<runid>.csv into output_dir; with
/// write_summary also appends a row to results.csv there.
inline ExperimentResult run_experiment(const Dataset& ds, const TrainConfig& cfg,
                                       double missing_ratio, const std::string& output_dir,
                                       int restarts = 10, bool write_summary = true) {
  validate_config(cfg);
  if (missing_ratio < 0.0 || missing_ratio > 1.0)
    throw std::domain_error("run_experiment: missing_ratio must be in [0, 1]");
  if (missing_ratio > 0.0 && !ds.has_graph())
    throw std::domain_error("run_experiment: missing_ratio > 0 needs a dataset with a graph");
  if (restarts < 1) throw std::domain_error("run_experiment: restarts must be >= 1");

  ExperimentResult result;
  result.dataset = ds.name;
  result.model_kind = cfg.model_kind;
  result.missing_ratio = missing_ratio;
  result.config = cfg;
  result.restarts = restarts;
  result.run_id = run_id_for(ds, cfg, missing_ratio, restarts);

  std::optional<Matrix> graph;
  if (ds.has_graph()) {
    graph = missing_ratio > 0.0
                ? perturb_edges(*ds.adjacency, missing_ratio,
                                derive_seed(cfg.seed, detail::kSeedPerturb))
                : *ds.adjacency;
  }

  const auto started = std::chrono::steady_clock::now();
  const TrainResult trained = train(ds.features, graph, cfg);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.loss_trace = trained.loss_trace;

  if (ds.has_labels() && ds.num_classes >= 2) {
    const ClusteringReport clustering =
        evaluate_clustering(trained.embedding.z, ds.labels, ds.num_classes, restarts,
                            derive_seed(cfg.seed, detail::kSeedKmeans));
    result.acc_mean = clustering.acc_mean;
    result.acc_std = clustering.acc_std;
    result.nmi_mean = clustering.nmi_mean;
    result.nmi_std = clustering.nmi_std;

    const TrainTestSplit split = split_train_test(
        ds.labels, static_cast<int>(ds.n()), 0.7, derive_seed(cfg.seed, detail::kSeedSplit));
    Matrix z_train(split.train.size(), trained.embedding.z.cols());
    Matrix z_test(split.test.size(), trained.embedding.z.cols());
    std::vector<int> y_train(split.train.size()), y_test(split.test.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      z_train.row(i) = trained.embedding.z.row(split.train[i]);
      y_train[i] = ds.labels[split.train[i]];
    }
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      z_test.row(i) = trained.embedding.z.row(split.test[i]);
      y_test[i] = ds.labels[split.test[i]];
    }
    if (!split.test.empty())
      result.f1 = linear_classify_f1(z_train, y_train, z_test, y_test, ds.num_classes);
  }

  const std::filesystem::path dir(output_dir);
  std::filesystem::create_directories(dir);
  write_matrix_csv(trained.embedding.z, (dir / ("embedding_" + result.run_id + ".csv")).string());
  {
    std::ofstream loss_out(dir / ("loss_" + result.run_id + ".csv"));
    if (!loss_out) throw DataError("cannot write loss trace for " + result.run_id);
    for (double v : result.loss_trace) loss_out << detail::format_g17(v) << '\n';
  }
  if (write_summary) append_results_csv(dir / "results.csv", {result});
  return result;
}

using SweepGrid = std::vector<std::pair<std::string, std::vector<double>>>;

namespace detail {

inline void apply_sweep_value(TrainConfig& cfg, double& missing_ratio,
                              const std::string& key, double value) {
  if (key == "lambda")
    cfg.lambda = value;
  else if (key == "beta")
    cfg.beta = value;
  else if (key == "alpha")
    cfg.alpha = value;
  else if (key == "tau")
    cfg.tau = static_cast<int>(value);
  else if (key == "k_init")
    cfg.k_init = static_cast<int>(value);
  else if (key == "missing_ratio")
    missing_ratio = value;
  else
    throw ConfigError("sweep: unknown grid key '" + key + "'");
}

}  // namespace detail

/// Cartesian-product sweep over grid values. Runs execute concurrently up to
/// `jobs`; per-run artifacts are written from the runs, the shared summary
/// table once at the end, in product order.
inline std::vector<ExperimentResult> sweep(const Dataset& ds, const TrainConfig& base,
                                           const SweepGrid& grid, const std::string& output_dir,
                                           double base_missing_ratio = 0.0, int jobs = 1,
                                           int restarts = 10) {
  for (const auto& [key, values] : grid) {
    double probe_ratio = base_missing_ratio;
    TrainConfig probe = base;
    if (values.empty()) throw ConfigError("sweep: empty value list for '" + key + "'");
    detail::apply_sweep_value(probe, probe_ratio, key, values.front());
  }

  std::size_t total = 1;
  for (const auto& [_, values] : grid) total *= values.size();

  std::vector<std::vector<double>> combos;
  combos.reserve(total);
  std::vector<double> current(grid.size());
  auto expand = [&](auto&& self, std::size_t depth) -> void {
    if (depth == grid.size()) {
      combos.push_back(current);
      return;
    }
    for (double v : grid[depth].second) {
      current[depth] = v;
      self(self, depth + 1);
    }
  };
  expand(expand, 0);

  std::vector<ExperimentResult> results(combos.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= combos.size()) return;
      try {
        TrainConfig cfg = base;
        double ratio = base_missing_ratio;
        for (std::size_t g = 0; g < grid.size(); ++g)
          detail::apply_sweep_value(cfg, ratio, grid[g].first, combos[i][g]);
        results[i] = run_experiment(ds, cfg, ratio, output_dir, restarts,
                                    /*write_summary=*/false);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(jobs, combos.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::filesystem::create_directories(output_dir);
  append_results_csv(std::filesystem::path(output_dir) / "results.csv", results);
  return results;
}

}  // namespace agem
