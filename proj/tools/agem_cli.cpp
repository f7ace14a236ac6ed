// Command-line front end: train/sweep/eval over the citation and CSV dataset
// formats. Exit codes: 0 success, 2 config error, 3 data error, 4 numeric
// failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agem/agem.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string dataset;
  std::string format = "citation";
  std::string model = "bage";
  int epochs = 200;
  double lr = 0.0;  // 0 = per-model default
  double lambda = 0.01;
  double beta = 20.0;
  double alpha = 0.1;
  int tau = 12;
  int k_init = 10;
  int k_min = 2;
  int k_max = 30;
  int hidden = 32;
  int embed = 16;
  double missing_ratio = 0.0;
  std::uint64_t seed = 0;
  int restarts = 10;
  std::string out = "results";
};

void add_dataset_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--dataset", opt.dataset, "Dataset path or name")->required();
  cmd->add_option("--format", opt.format, "Dataset format")
      ->check(CLI::IsMember({"citation", "csv"}));
}

void add_train_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--model", opt.model, "Model kind")
      ->check(CLI::IsMember({"bage", "vbage"}));
  cmd->add_option("--epochs", opt.epochs, "Training epochs");
  cmd->add_option("--lr", opt.lr, "Learning rate (default 1e-4 bage, 1e-3 vbage)");
  cmd->add_option("--lambda", opt.lambda, "Laplacian loss coefficient");
  cmd->add_option("--beta", opt.beta, "Reconstruction penalty on edges");
  cmd->add_option("--alpha", opt.alpha, "Blend weight for the learned graph");
  cmd->add_option("--tau", opt.tau, "Adaptive-update horizon (epochs)");
  cmd->add_option("--k-init", opt.k_init, "Initial neighbor count");
  cmd->add_option("--k-min", opt.k_min, "Neighbor count lower clamp");
  cmd->add_option("--k-max", opt.k_max, "Neighbor count upper clamp");
  cmd->add_option("--hidden", opt.hidden, "Hidden layer width");
  cmd->add_option("--embed", opt.embed, "Embedding width");
  cmd->add_option("--missing-ratio", opt.missing_ratio, "Edge deletion probability");
  cmd->add_option("--seed", opt.seed, "Master seed (AGAE_SEED overrides)");
  cmd->add_option("--restarts", opt.restarts, "k-means restarts");
  cmd->add_option("--out", opt.out, "Output directory");
}

agem::TrainConfig to_config(const CommonOptions& opt) {
  const agem::ModelKind kind =
      opt.model == "vbage" ? agem::ModelKind::Vbage : agem::ModelKind::Bage;
  agem::TrainConfig cfg = agem::TrainConfig::defaults(kind);
  cfg.epochs = opt.epochs;
  if (opt.lr > 0.0) cfg.lr = opt.lr;
  cfg.lambda = opt.lambda;
  cfg.beta = opt.beta;
  cfg.alpha = opt.alpha;
  cfg.tau = opt.tau;
  cfg.k_init = opt.k_init;
  cfg.k_min = opt.k_min;
  cfg.k_max = opt.k_max;
  cfg.hidden_dim = opt.hidden;
  cfg.embed_dim = opt.embed;
  cfg.seed = opt.seed;
  return cfg;
}

// Resolves --dataset for the citation format: an explicit prefix, a directory
// holding <name>.content, or a bare name under data/.
std::pair<std::string, std::string> citation_paths(const std::string& value) {
  std::vector<std::string> prefixes;
  prefixes.push_back(value);
  const std::string base = fs::path(value).filename().string();
  if (!base.empty()) prefixes.push_back((fs::path(value) / base).string());
  prefixes.push_back((fs::path("data") / value / value).string());
  for (const auto& prefix : prefixes) {
    if (fs::exists(prefix + ".content") && fs::exists(prefix + ".cites"))
      return {prefix + ".content", prefix + ".cites"};
  }
  throw agem::DataError("no citation dataset found for '" + value +
                        "' (need <prefix>.content and <prefix>.cites)");
}

std::string csv_path(const std::string& value) {
  if (fs::exists(value)) return value;
  const std::string under_data = (fs::path("data") / value / (value + ".csv")).string();
  if (fs::exists(under_data)) return under_data;
  throw agem::DataError("no csv dataset found for '" + value + "'");
}

agem::Dataset load(const CommonOptions& opt) {
  if (opt.format == "csv") return agem::load_feature_dataset(csv_path(opt.dataset));
  const auto [content, cites] = citation_paths(opt.dataset);
  agem::Dataset ds = agem::load_citation_dataset(content, cites);
  if (ds.dropped_edges > 0)
    std::cerr << "warning: dropped " << ds.dropped_edges
              << " edge(s) referencing unknown or self ids\n";
  return ds;
}

void apply_seed_env(CommonOptions& opt) {
  const char* env = std::getenv("AGAE_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw agem::ConfigError("AGAE_SEED must be a nonnegative integer");
  opt.seed = static_cast<std::uint64_t>(value);
}

void print_result(const agem::ExperimentResult& r) {
  std::cout << "run " << r.run_id << "\n"
            << "  dataset=" << r.dataset << " model=" << agem::to_string(r.model_kind)
            << " missing_ratio=" << r.missing_ratio << "\n"
            << "  acc=" << r.acc_mean << " +/- " << r.acc_std << "  nmi=" << r.nmi_mean
            << " +/- " << r.nmi_std << "  f1=" << r.f1 << "\n"
            << "  final_loss=" << (r.loss_trace.empty() ? 0.0 : r.loss_trace.back())
            << "  seconds=" << r.seconds << "\n";
}

agem::SweepGrid parse_grid(const std::vector<std::string>& specs) {
  agem::SweepGrid grid;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      throw agem::ConfigError("grid spec must look like key=v1,v2,... got '" + spec + "'");
    std::vector<double> values;
    std::stringstream list(spec.substr(eq + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw agem::ConfigError("grid value '" + item + "' is not a number");
      }
    }
    if (values.empty()) throw agem::ConfigError("grid key '" + spec + "' has no values");
    grid.emplace_back(spec.substr(0, eq), std::move(values));
  }
  return grid;
}

int run(int argc, char** argv) {
  CLI::App app{"Adaptive graph embedding (BAGE/VBAGE): training, sweeps and evaluation"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::vector<std::string> grid_specs;
  int jobs = 1;
  std::string embedding_path;

  CLI::App* train_cmd = app.add_subcommand("train", "Train one model and evaluate it");
  add_dataset_flags(train_cmd, opt);
  add_train_flags(train_cmd, opt);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Cartesian sweep over grid values");
  add_dataset_flags(sweep_cmd, opt);
  add_train_flags(sweep_cmd, opt);
  sweep_cmd->add_option("--grid", grid_specs,
                        "Grid spec key=v1,v2,... (repeatable; keys: lambda, beta, "
                        "alpha, tau, k_init, missing_ratio)");
  sweep_cmd->add_option("--jobs", jobs, "Concurrent runs");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score an exported embedding against dataset labels");
  add_dataset_flags(eval_cmd, opt);
  eval_cmd->add_option("--embedding", embedding_path, "Embedding csv to score")->required();
  eval_cmd->add_option("--restarts", opt.restarts, "k-means restarts");
  eval_cmd->add_option("--seed", opt.seed, "Master seed (AGAE_SEED overrides)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  apply_seed_env(opt);

  if (train_cmd->parsed()) {
    const agem::Dataset ds = load(opt);
    const agem::ExperimentResult result =
        agem::run_experiment(ds, to_config(opt), opt.missing_ratio, opt.out, opt.restarts);
    print_result(result);
    std::cout << "summary appended to " << (fs::path(opt.out) / "results.csv").string()
              << "\n";
  } else if (sweep_cmd->parsed()) {
    const agem::Dataset ds = load(opt);
    const auto results = agem::sweep(ds, to_config(opt), parse_grid(grid_specs), opt.out,
                                     opt.missing_ratio, jobs, opt.restarts);
    for (const auto& r : results) print_result(r);
    std::cout << results.size() << " run(s); summary appended to "
              << (fs::path(opt.out) / "results.csv").string() << "\n";
  } else if (eval_cmd->parsed()) {
    const agem::Dataset ds = load(opt);
    const agem::Matrix z = agem::read_matrix_csv(embedding_path);
    if (z.rows() != ds.n())
      throw agem::DataError("embedding rows do not match dataset size");
    if (!ds.has_labels() || ds.num_classes < 2)
      throw agem::DataError("eval needs a labeled dataset with >= 2 classes");
    const agem::ClusteringReport rep = agem::evaluate_clustering(
        z, ds.labels, ds.num_classes, opt.restarts,
        agem::derive_seed(opt.seed, agem::detail::kSeedKmeans));
    std::cout << "acc=" << rep.acc_mean << " +/- " << rep.acc_std
              << "  nmi=" << rep.nmi_mean << " +/- " << rep.nmi_std
              << "  (best-inertia restart: acc=" << rep.best_acc
              << " nmi=" << rep.best_nmi << ")\n";
    const agem::TrainTestSplit split =
        agem::split_train_test(ds.labels, static_cast<int>(ds.n()), 0.7,
                               agem::derive_seed(opt.seed, agem::detail::kSeedSplit));
    agem::Matrix z_train(split.train.size(), z.cols()), z_test(split.test.size(), z.cols());
    std::vector<int> y_train(split.train.size()), y_test(split.test.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      z_train.row(i) = z.row(split.train[i]);
      y_train[i] = ds.labels[split.train[i]];
    }
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      z_test.row(i) = z.row(split.test[i]);
      y_test[i] = ds.labels[split.test[i]];
    }
    if (!split.test.empty())
      std::cout << "f1=" << agem::linear_classify_f1(z_train, y_train, z_test, y_test,
                                                     ds.num_classes)
                << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const agem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const agem::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const agem::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
}
