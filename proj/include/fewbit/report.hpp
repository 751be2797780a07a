#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fewbit {

struct MetricStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;

  static MetricStats of(std::span<const double> values);
};

/// Metrics of one full run (one seed).
struct RunMetrics {
  std::uint64_t seed = 0;
  int member_count = 0;
  long long total_links_per_member = 0;
  int test_size = 0;

  double correct_pct = 0.0;
  double wrong_pct = 0.0;
  double unclassified_pct = 0.0;
  std::map<std::string, double> status_pct;  // the seven label statuses

  double sm_time_s = 0.0;        // mean over members
  double mm_gap_mean_pct = 0.0;  // over members reporting a gap
  double mm_gap_max_pct = 0.0;
  double links_pct_after_mm = 0.0;
  double links_pct_after_mw = 0.0;
  double active_links = 0.0;  // mean nonzero links per member
  double sm_train_accuracy_pct = 0.0;

  std::vector<long long> weight_histogram;          // value -P..P, summed over members
  std::vector<std::vector<long long>> confusion;    // [actual][predicted..., unclassified]
};

struct ExperimentReport {
  std::string experiment;  // "pair" | "ensemble"
  std::string dataset;
  std::vector<int> classes;
  int subset_size = 2;
  std::vector<int> layer_sizes;
  int weight_bound = 1;
  int images_per_class = 0;
  int test_per_class = 0;
  std::string stages;
  double budget_sm_s = 0.0, budget_mm_s = 0.0, budget_mw_s = 0.0;
  std::vector<std::uint64_t> seeds;
  bool partial = false;
  std::vector<std::string> failures;
  std::vector<RunMetrics> runs;

  MetricStats stat(double RunMetrics::* field) const;
  MetricStats status_stat(const std::string& key) const;
  std::vector<long long> total_histogram() const;
  std::vector<std::vector<long long>> total_confusion() const;

  /// Checks the structural identities every emitted report must satisfy:
  /// classification percentages add to 100, histogram totals equal
  /// total_links x member count, confusion rows equal per-class test counts.
  void validate() const;
};

/// Stable field order, percentages at two decimals. Returns named documents:
/// json -> {report.json}; csv -> {summary.csv, weights.csv, confusion.csv}.
std::vector<std::pair<std::string, std::string>> emit_report(const ExperimentReport& report,
                                                             const std::string& format);

}  // namespace fewbit
