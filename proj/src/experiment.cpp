#include "fewbit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fewbit/inference.hpp"

namespace fewbit {

namespace {

int required_output_width(int subset_size) {
  int width = 1;
  while ((1 << width) < subset_size) ++width;
  return width;
}

void check_config(const ExperimentConfig& config, int feature_dim) {
  if (config.classes.size() < 2) {
    throw std::invalid_argument("experiment needs at least two classes");
  }
  if (config.subset_size < 2 || config.subset_size > static_cast<int>(config.classes.size())) {
    throw std::invalid_argument("subset size must lie in [2, |classes|]");
  }
  if (config.arch.inputs() != feature_dim) {
    throw std::invalid_argument("architecture input width " +
                                std::to_string(config.arch.inputs()) +
                                " does not match the data dimension " +
                                std::to_string(feature_dim));
  }
  if (config.arch.outputs() != required_output_width(config.subset_size)) {
    throw std::invalid_argument("architecture output width must be ceil(log2(subset size))");
  }
  if (config.seeds.empty()) throw std::invalid_argument("at least one seed required");
}

}  // namespace

std::vector<SeedData> prepare_sampled_seed_data(const Dataset& train_pool,
                                                const Dataset& test_pool,
                                                const ExperimentConfig& config) {
  if (train_pool.samples.empty()) throw std::invalid_argument("empty training pool");
  check_config(config, static_cast<int>(train_pool.samples.front().features.size()));

  std::vector<SeedData> out;
  std::set<std::size_t> exclusion;
  for (std::uint64_t seed : config.seeds) {
    SeedData sd;
    sd.seed = seed;
    const auto drawn = sample_per_class(train_pool, config.classes, config.images_per_class,
                                        seed, exclusion);
    for (const auto& [cls, indices] : drawn) {
      auto& features = sd.train_features[cls];
      features.reserve(indices.size());
      for (std::size_t idx : indices) features.push_back(train_pool.samples[idx].features);
    }
    out.push_back(std::move(sd));
  }

  // The test set is shared across seeds and disjoint from every training
  // draw when both pools are the same corpus.
  const bool same_corpus = &train_pool == &test_pool;
  const auto test_indices = build_test_set(test_pool, config.classes, config.test_per_class,
                                           same_corpus ? exclusion : std::set<std::size_t>{});
  std::vector<RawSample> test;
  test.reserve(test_indices.size());
  for (std::size_t idx : test_indices) test.push_back(test_pool.samples[idx]);
  for (auto& sd : out) sd.test = test;
  return out;
}

std::vector<SeedData> prepare_split_seed_data(const std::string& csv_text, double test_fraction,
                                              const ExperimentConfig& config) {
  std::vector<SeedData> out;
  for (std::uint64_t seed : config.seeds) {
    const TrainTestSplit split = load_csv_heart(csv_text, test_fraction, seed);
    SeedData sd;
    sd.seed = seed;
    for (const auto& sample : split.train) {
      sd.train_features[sample.label].push_back(sample.features);
    }
    sd.test = split.test;
    for (int cls : config.classes) {
      if (!sd.train_features.contains(cls)) {
        throw CapacityError("split for seed " + std::to_string(seed) + " lacks class " +
                            std::to_string(cls));
      }
    }
    out.push_back(std::move(sd));
  }
  if (!out.empty()) {
    check_config(config,
                 static_cast<int>(out.front().train_features.begin()->second.front().size()));
  }
  return out;
}

ExperimentOutcome run_experiment(const std::vector<SeedData>& seed_data,
                                 const ExperimentConfig& config) {
  if (seed_data.empty()) throw std::invalid_argument("no seed data");

  ExperimentOutcome outcome;
  ExperimentReport& report = outcome.report;
  report.experiment = config.subset_size == static_cast<int>(config.classes.size()) &&
                              config.classes.size() == 2
                          ? "pair"
                          : "ensemble";
  report.dataset = config.dataset_name;
  report.classes = config.classes;
  std::ranges::sort(report.classes);
  report.subset_size = config.subset_size;
  report.layer_sizes = config.arch.layer_sizes;
  report.weight_bound = config.arch.weight_bound;
  report.images_per_class = config.images_per_class;
  report.test_per_class = config.test_per_class;
  report.stages = to_string(config.plan);
  report.budget_sm_s = config.budget.sm_s;
  report.budget_mm_s = config.budget.mm_s;
  report.budget_mw_s = config.budget.mw_s;
  for (const auto& sd : seed_data) report.seeds.push_back(sd.seed);

  for (const auto& sd : seed_data) {
    auto built = build_ensemble_detailed(report.classes, config.subset_size, sd.train_features,
                                         config.arch, config.tol, config.budget, config.plan,
                                         config.trainer, config.parallelism);
    if (!built.failed_subsets.empty()) {
      report.partial = true;
      for (std::size_t i = 0; i < built.failed_subsets.size(); ++i) {
        std::string text = "seed " + std::to_string(sd.seed) + " subset {";
        for (std::size_t j = 0; j < built.failed_subsets[i].size(); ++j) {
          if (j) text += ",";
          text += std::to_string(built.failed_subsets[i][j]);
        }
        text += "}: " + built.failures[i];
        report.failures.push_back(std::move(text));
      }
    }

    RunMetrics run;
    run.seed = sd.seed;
    run.member_count = static_cast<int>(built.ensemble.members.size());
    run.total_links_per_member = config.arch.total_links();
    run.test_size = static_cast<int>(sd.test.size());

    // voting over the test points
    run.confusion.assign(report.classes.size(),
                         std::vector<long long>(report.classes.size() + 1, 0));
    std::map<std::string, long long> status_counts;
    long long correct = 0, wrong = 0, unclassified = 0;
    for (const auto& point : sd.test) {
      const VoteTally votes = tally(point.features, built.ensemble);
      const std::optional<int> prediction = resolve(votes, built.ensemble);
      const LabelStatus status = classify_status(votes, built.ensemble, point.label);
      status_counts[to_string(status, config.subset_size)]++;
      const auto actual_it = std::ranges::find(report.classes, point.label);
      const std::size_t row = actual_it - report.classes.begin();
      if (!prediction) {
        ++unclassified;
        run.confusion[row][report.classes.size()]++;
      } else {
        const auto pred_it = std::ranges::find(report.classes, *prediction);
        run.confusion[row][pred_it - report.classes.begin()]++;
        if (*prediction == point.label) ++correct;
        else ++wrong;
      }
    }
    if (run.test_size > 0) {
      const double denom = static_cast<double>(run.test_size);
      run.correct_pct = 100.0 * correct / denom;
      run.wrong_pct = 100.0 * wrong / denom;
      run.unclassified_pct = 100.0 * unclassified / denom;
      for (const auto& [key, count] : status_counts) {
        run.status_pct[key] = 100.0 * count / denom;
      }
    }

    // per-member training metrics
    run.weight_histogram.assign(2 * config.arch.weight_bound + 1, 0);
    double sm_time = 0.0, train_acc = 0.0, links_mm = 0.0, links_mw = 0.0, active = 0.0;
    double gap_sum = 0.0;
    int gap_count = 0;
    for (std::size_t mi = 0; mi < built.trained.size(); ++mi) {
      const TrainedNet& net = built.trained[mi];
      if (net.sm) sm_time += net.sm->wall_time_s;
      if (net.mm && net.mm->mip_gap) {
        const double gap_pct = 100.0 * *net.mm->mip_gap;
        gap_sum += gap_pct;
        run.mm_gap_max_pct = std::max(run.mm_gap_max_pct, gap_pct);
        ++gap_count;
      }
      train_acc += 100.0 * net.training_accuracy();
      const auto& after_mm = net.weights_after_mm ? *net.weights_after_mm : net.weights;
      links_mm += 100.0 * after_mm.nonzero_count() / config.arch.total_links();
      links_mw += 100.0 * net.weights.nonzero_count() / config.arch.total_links();
      active += static_cast<double>(net.weights.nonzero_count());
      for (int l = 1; l <= config.arch.depth(); ++l) {
        for (int value : net.weights.layer_values(l)) {
          run.weight_histogram[value + config.arch.weight_bound]++;
        }
      }
    }
    if (!built.trained.empty()) {
      const double members = static_cast<double>(built.trained.size());
      run.sm_time_s = sm_time / members;
      run.mm_gap_mean_pct = gap_count > 0 ? gap_sum / gap_count : 0.0;
      run.sm_train_accuracy_pct = train_acc / members;
      run.links_pct_after_mm = links_mm / members;
      run.links_pct_after_mw = links_mw / members;
      run.active_links = active / members;
    }

    report.runs.push_back(std::move(run));
    outcome.ensembles_json.push_back(serialize_ensemble(built.ensemble));
  }

  outcome.exit_code = report.partial ? 2 : 0;
  return outcome;
}

}  // namespace fewbit
