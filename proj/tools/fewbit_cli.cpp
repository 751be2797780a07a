#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "fewbit/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fewbit;

struct CliOptions {
  std::string dataset = "synthetic";
  std::string data_dir = ".";
  std::vector<int> classes;
  std::vector<int> pair;
  int subset_size = 2;
  std::vector<int> arch_sizes;
  int p_bound = 1;
  int images_per_class = 10;
  int test_per_class = 100;
  std::vector<double> budget = {60.0, 60.0, 20.0};
  std::string stages = "sm+mm+mw";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double epsilon = -1.0;  // <0: keyed on the dataset value type
  int downsample_factor = 1;
  std::string backend = "scipy";
  int parallel = 0;  // 0: hardware threads
  std::string out_dir = "out";
  std::string format = "json";
};

int run(const CliOptions& opt, bool pair_mode) {
  ExperimentConfig config;
  config.dataset_name = opt.dataset;
  if (pair_mode) {
    if (opt.pair.size() != 2) throw CLI::ValidationError("--pair needs exactly two classes");
    config.classes = opt.pair;
    config.subset_size = 2;
  } else {
    config.classes = opt.classes;
    config.subset_size = opt.subset_size;
  }
  if (opt.arch_sizes.size() < 2) throw CLI::ValidationError("--arch needs at least two sizes");
  config.arch = Architecture(opt.arch_sizes, opt.p_bound);
  config.images_per_class = opt.images_per_class;
  config.test_per_class = opt.test_per_class;
  if (opt.budget.size() != 3) throw CLI::ValidationError("--budget needs SM,MM,MW seconds");
  config.budget = {opt.budget[0], opt.budget[1], opt.budget[2], true};
  config.plan = parse_stage_plan(opt.stages);
  config.seeds = opt.seeds;
  config.parallelism = opt.parallel > 0
                           ? opt.parallel
                           : static_cast<int>(std::thread::hardware_concurrency());
  if (opt.backend == "scipy") {
    config.trainer.backend = default_backend();
  } else {
    throw CLI::ValidationError("unknown backend profile '" + opt.backend +
                               "' (set FEWBIT_BACKEND_CMD for a custom command)");
  }

  const bool continuous = opt.dataset == "heart";
  config.tol = default_tolerances(!continuous);
  if (opt.epsilon > 0) config.tol.epsilon = opt.epsilon;

  std::vector<SeedData> seed_data;
  Dataset train_pool, test_pool;
  if (opt.dataset == "mnist" || opt.dataset == "fashion") {
    const fs::path dir(opt.data_dir);
    train_pool = load_idx_files(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
    test_pool = load_idx_files(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
    if (opt.downsample_factor > 1) {
      train_pool = downsample_dataset(train_pool, 28, opt.downsample_factor);
      test_pool = downsample_dataset(test_pool, 28, opt.downsample_factor);
    }
    seed_data = prepare_sampled_seed_data(train_pool, test_pool, config);
  } else if (opt.dataset == "heart") {
    std::ifstream in(fs::path(opt.data_dir) / "heart.csv");
    if (!in) throw FormatError("cannot open " + (fs::path(opt.data_dir) / "heart.csv").string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    seed_data = prepare_split_seed_data(text, 0.2, config);
  } else if (opt.dataset == "synthetic") {
    // Digit-shaped images when the architecture expects 28x28 inputs,
    // integer clusters otherwise. Train and test pools are disjoint by
    // construction (separate generator streams).
    if (config.arch.inputs() == 784 && opt.downsample_factor == 1) {
      const int pool = std::max<int>(config.images_per_class * config.seeds.size() * 2, 64);
      train_pool = synthesize_digit_images(config.classes, pool, 9001);
      test_pool = synthesize_digit_images(config.classes, config.test_per_class, 4242);
    } else {
      const int dim = config.arch.inputs();
      const int pool = std::max<int>(config.images_per_class * config.seeds.size() * 2, 64);
      train_pool = synthesize_clusters(config.classes, dim, pool, 9001);
      test_pool = synthesize_clusters(config.classes, dim, config.test_per_class, 4242);
    }
    seed_data = prepare_sampled_seed_data(train_pool, test_pool, config);
  } else {
    throw CLI::ValidationError("unknown dataset '" + opt.dataset + "'");
  }

  const ExperimentOutcome outcome = run_experiment(seed_data, config);

  fs::create_directories(opt.out_dir);
  for (const auto& [name, content] : emit_report(outcome.report, opt.format)) {
    std::ofstream out(fs::path(opt.out_dir) / name);
    out << content;
  }
  for (std::size_t i = 0; i < outcome.ensembles_json.size(); ++i) {
    std::ofstream out(fs::path(opt.out_dir) /
                      ("ensemble_seed" + std::to_string(config.seeds[i]) + ".json"));
    out << outcome.ensembles_json[i];
  }

  const auto correct = outcome.report.stat(&RunMetrics::correct_pct);
  const auto links = outcome.report.stat(&RunMetrics::links_pct_after_mw);
  std::cout << "runs: " << outcome.report.runs.size()
            << "  accuracy mean/min/max: " << correct.mean << "/" << correct.min << "/"
            << correct.max << "%  nonzero links: " << links.mean << "%\n";
  if (outcome.report.partial) {
    std::cout << "partial: " << outcome.report.failures.size() << " member failure(s)\n";
    for (const auto& failure : outcome.report.failures) std::cout << "  " << failure << "\n";
  }
  std::cout << "reports written to " << opt.out_dir << "\n";
  return outcome.exit_code;
}

void add_common_options(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--dataset", opt.dataset, "mnist|fashion|heart|synthetic");
  cmd->add_option("--data-dir", opt.data_dir, "directory holding the dataset files");
  cmd->add_option("--arch", opt.arch_sizes, "layer sizes n0,n1,...,nL")->delimiter(',');
  cmd->add_option("--p-bound", opt.p_bound, "weight magnitude bound P");
  cmd->add_option("--images-per-class", opt.images_per_class, "training samples per class");
  cmd->add_option("--test-per-class", opt.test_per_class, "test samples per class");
  cmd->add_option("--budget", opt.budget, "per-stage seconds SM,MM,MW")->delimiter(',');
  cmd->add_option("--stages", opt.stages, "sm|sm+mw|sm+mm|sm+mm+mw");
  cmd->add_option("--seeds", opt.seeds, "sampling seeds")->delimiter(',');
  cmd->add_option("--epsilon", opt.epsilon, "strict-inequality offset");
  cmd->add_option("--downsample", opt.downsample_factor, "image downsampling factor");
  cmd->add_option("--backend", opt.backend, "solver backend profile");
  cmd->add_option("--parallel", opt.parallel, "training jobs in flight (0 = hw threads)");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--format", opt.format, "json|csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-bit network training via the three-stage MILP pipeline"};
  app.require_subcommand(1);
  CliOptions opt;

  CLI::App* pair = app.add_subcommand("pair", "train and score one two-class network per seed");
  pair->add_option("--pair", opt.pair, "the two class ids, e.g. 1,8")
      ->delimiter(',')
      ->required();
  add_common_options(pair, opt);

  CLI::App* ensemble =
      app.add_subcommand("ensemble", "train one net per class subset and vote");
  ensemble->add_option("--classes", opt.classes, "class ids")->delimiter(',')->required();
  ensemble->add_option("--m", opt.subset_size, "subset size (2 = one-versus-one)");
  add_common_options(ensemble, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    return run(opt, pair->parsed());
  } catch (const CLI::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
