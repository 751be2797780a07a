#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fewbit/data.hpp"
#include "fewbit/ensemble.hpp"
#include "fewbit/report.hpp"

namespace fewbit {

struct ExperimentConfig {
  std::string dataset_name = "synthetic";
  std::vector<int> classes;
  int subset_size = 2;
  Architecture arch;
  Tolerances tol = default_tolerances(true);
  StageBudget budget;
  StagePlan plan = StagePlan::SM_MM_MW;
  int images_per_class = 10;
  int test_per_class = 100;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  TrainerOptions trainer;
  int parallelism = 1;
};

/// Resolved inputs for one seed: per-class training features plus the test
/// points the run is scored on.
struct SeedData {
  std::uint64_t seed = 0;
  std::map<int, std::vector<std::vector<double>>> train_features;
  std::vector<RawSample> test;
};

/// Draws disjoint training sets per seed from train_pool (one exclusion set
/// threaded through all seeds) and one balanced test set from test_pool,
/// shared by every seed. Pass the same dataset for both pools to sample
/// training and test data from a single corpus without overlap.
std::vector<SeedData> prepare_sampled_seed_data(const Dataset& train_pool,
                                                const Dataset& test_pool,
                                                const ExperimentConfig& config);

/// One fresh train/test split per seed (the two-class tabular flow).
std::vector<SeedData> prepare_split_seed_data(const std::string& csv_text,
                                              double test_fraction,
                                              const ExperimentConfig& config);

struct ExperimentOutcome {
  ExperimentReport report;
  std::vector<std::string> ensembles_json;  // one serialized ensemble per seed
  int exit_code = 0;                        // 0 ok, 2 partial member failures
};

/// Trains one ensemble per seed and scores the voting pipeline on the seed's
/// test points. config.classes with subset_size == |classes| == 2 covers the
/// single-pair experiments.
ExperimentOutcome run_experiment(const std::vector<SeedData>& seed_data,
                                 const ExperimentConfig& config);

}  // namespace fewbit
