#include "fewbit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace fewbit {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed2(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

const std::vector<std::string>& status_keys_for(int subset_size) {
  static const std::vector<std::string> two = {"1C", "1I", "2C", "2I'", "2I''", "oI'", "oI''"};
  static const std::vector<std::string> general = {"1C", "1I", "mC", "mI'", "mI''", "oI'", "oI''"};
  return subset_size == 2 ? two : general;
}

}  // namespace

MetricStats MetricStats::of(std::span<const double> values) {
  MetricStats stats;
  if (values.empty()) return stats;
  stats.min = stats.max = values[0];
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    stats.min = std::min(stats.min, v);
    stats.max = std::max(stats.max, v);
  }
  stats.mean = sum / static_cast<double>(values.size());
  return stats;
}

MetricStats ExperimentReport::stat(double RunMetrics::* field) const {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& run : runs) values.push_back(run.*field);
  return MetricStats::of(values);
}

MetricStats ExperimentReport::status_stat(const std::string& key) const {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& run : runs) {
    const auto it = run.status_pct.find(key);
    values.push_back(it == run.status_pct.end() ? 0.0 : it->second);
  }
  return MetricStats::of(values);
}

std::vector<long long> ExperimentReport::total_histogram() const {
  std::vector<long long> total(2 * weight_bound + 1, 0);
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.weight_histogram.size() && i < total.size(); ++i) {
      total[i] += run.weight_histogram[i];
    }
  }
  return total;
}

std::vector<std::vector<long long>> ExperimentReport::total_confusion() const {
  std::vector<std::vector<long long>> total(classes.size(),
                                            std::vector<long long>(classes.size() + 1, 0));
  for (const auto& run : runs) {
    for (std::size_t r = 0; r < run.confusion.size() && r < total.size(); ++r) {
      for (std::size_t c = 0; c < run.confusion[r].size() && c < total[r].size(); ++c) {
        total[r][c] += run.confusion[r][c];
      }
    }
  }
  return total;
}

void ExperimentReport::validate() const {
  for (const auto& run : runs) {
    const double sum = run.correct_pct + run.wrong_pct + run.unclassified_pct;
    if (run.test_size > 0 && std::abs(sum - 100.0) > 0.01) {
      throw std::logic_error("classification percentages sum to " + std::to_string(sum));
    }
    double status_sum = 0.0;
    for (const auto& [key, pct] : run.status_pct) status_sum += pct;
    if (run.test_size > 0 && std::abs(status_sum - 100.0) > 0.01) {
      throw std::logic_error("label status percentages sum to " + std::to_string(status_sum));
    }
    long long histogram_total = 0;
    for (long long count : run.weight_histogram) histogram_total += count;
    if (histogram_total != run.total_links_per_member * run.member_count) {
      throw std::logic_error("weight histogram total mismatch");
    }
    long long confusion_total = 0;
    for (const auto& row : run.confusion) {
      for (long long cell : row) confusion_total += cell;
    }
    if (confusion_total != run.test_size) {
      throw std::logic_error("confusion matrix total mismatch");
    }
  }
}

std::vector<std::pair<std::string, std::string>> emit_report(const ExperimentReport& report,
                                                             const std::string& format) {
  report.validate();
  const auto& status_keys = status_keys_for(report.subset_size);

  if (format == "json") {
    ordered_json doc;
    doc["experiment"] = report.experiment;
    doc["dataset"] = report.dataset;
    doc["classes"] = report.classes;
    doc["subset_size"] = report.subset_size;
    doc["layer_sizes"] = report.layer_sizes;
    doc["weight_bound"] = report.weight_bound;
    doc["images_per_class"] = report.images_per_class;
    doc["test_per_class"] = report.test_per_class;
    doc["stages"] = report.stages;
    doc["budget_s"] = {report.budget_sm_s, report.budget_mm_s, report.budget_mw_s};
    doc["seeds"] = report.seeds;
    doc["partial"] = report.partial;
    doc["failures"] = report.failures;

    auto stat_json = [](const MetricStats& s) {
      ordered_json j;
      j["mean"] = round2(s.mean);
      j["min"] = round2(s.min);
      j["max"] = round2(s.max);
      return j;
    };
    ordered_json agg;
    agg["correct_pct"] = stat_json(report.stat(&RunMetrics::correct_pct));
    agg["wrong_pct"] = stat_json(report.stat(&RunMetrics::wrong_pct));
    agg["unclassified_pct"] = stat_json(report.stat(&RunMetrics::unclassified_pct));
    ordered_json statuses;
    for (const auto& key : status_keys) statuses[key] = stat_json(report.status_stat(key));
    agg["label_status_pct"] = std::move(statuses);
    agg["sm_time_s"] = stat_json(report.stat(&RunMetrics::sm_time_s));
    agg["mm_gap_mean_pct"] = stat_json(report.stat(&RunMetrics::mm_gap_mean_pct));
    agg["mm_gap_max_pct"] = stat_json(report.stat(&RunMetrics::mm_gap_max_pct));
    agg["links_pct_after_mm"] = stat_json(report.stat(&RunMetrics::links_pct_after_mm));
    agg["links_pct_after_mw"] = stat_json(report.stat(&RunMetrics::links_pct_after_mw));
    agg["active_links"] = stat_json(report.stat(&RunMetrics::active_links));
    agg["sm_train_accuracy_pct"] = stat_json(report.stat(&RunMetrics::sm_train_accuracy_pct));
    doc["aggregate"] = std::move(agg);

    const auto histogram = report.total_histogram();
    ordered_json hist;
    long long total = 0;
    for (long long count : histogram) total += count;
    for (int value = -report.weight_bound; value <= report.weight_bound; ++value) {
      hist[std::to_string(value)] = histogram[value + report.weight_bound];
    }
    doc["weight_histogram"] = std::move(hist);
    doc["weight_histogram_total"] = total;

    ordered_json confusion = ordered_json::array();
    for (const auto& row : report.total_confusion()) confusion.push_back(row);
    doc["confusion_counts"] = std::move(confusion);

    ordered_json runs = ordered_json::array();
    for (const auto& run : report.runs) {
      ordered_json r;
      r["seed"] = run.seed;
      r["member_count"] = run.member_count;
      r["test_size"] = run.test_size;
      r["correct_pct"] = round2(run.correct_pct);
      r["wrong_pct"] = round2(run.wrong_pct);
      r["unclassified_pct"] = round2(run.unclassified_pct);
      ordered_json st;
      for (const auto& key : status_keys) {
        const auto it = run.status_pct.find(key);
        st[key] = round2(it == run.status_pct.end() ? 0.0 : it->second);
      }
      r["label_status_pct"] = std::move(st);
      r["sm_time_s"] = round2(run.sm_time_s);
      r["mm_gap_mean_pct"] = round2(run.mm_gap_mean_pct);
      r["mm_gap_max_pct"] = round2(run.mm_gap_max_pct);
      r["links_pct_after_mm"] = round2(run.links_pct_after_mm);
      r["links_pct_after_mw"] = round2(run.links_pct_after_mw);
      r["active_links"] = round2(run.active_links);
      r["sm_train_accuracy_pct"] = round2(run.sm_train_accuracy_pct);
      runs.push_back(std::move(r));
    }
    doc["runs"] = std::move(runs);
    return {{"report.json", doc.dump(2) + "\n"}};
  }

  if (format == "csv") {
    std::string summary = "row,images_per_class,correct,wrong,n.l.";
    for (const auto& key : status_keys) summary += "," + key;
    summary += ",sm_time_s,mm_gap_mean,mm_gap_max,links_mm,links_mw,active_links,train_acc\n";
    auto append_row = [&](const std::string& label, double MetricStats::* pick) {
      summary += label + "," + std::to_string(report.images_per_class);
      summary += "," + fixed2(report.stat(&RunMetrics::correct_pct).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::wrong_pct).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::unclassified_pct).*pick);
      for (const auto& key : status_keys) summary += "," + fixed2(report.status_stat(key).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::sm_time_s).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::mm_gap_mean_pct).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::mm_gap_max_pct).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::links_pct_after_mm).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::links_pct_after_mw).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::active_links).*pick);
      summary += "," + fixed2(report.stat(&RunMetrics::sm_train_accuracy_pct).*pick);
      summary += "\n";
    };
    append_row("mean", &MetricStats::mean);
    append_row("min", &MetricStats::min);
    append_row("max", &MetricStats::max);

    const auto histogram = report.total_histogram();
    long long total = 0;
    for (long long count : histogram) total += count;
    const double denom = total > 0 ? static_cast<double>(total) : 1.0;
    const int p = report.weight_bound;
    long long others = 0;
    for (int value = -p + 1; value < p; ++value) {
      if (value != 0) others += histogram[value + p];
    }
    std::string weights = "value_of_p,w=-P,w=0,w=P,others\n";
    weights += std::to_string(p);
    weights += "," + fixed2(100.0 * histogram[0] / denom);
    weights += "," + fixed2(100.0 * histogram[p] / denom);
    weights += "," + fixed2(100.0 * histogram[2 * p] / denom);
    weights += "," + (p == 1 ? std::string("-") : fixed2(100.0 * others / denom));
    weights += "\n";

    std::string confusion = "actual";
    for (int cls : report.classes) confusion += ",pred_" + std::to_string(cls);
    confusion += ",n.l.\n";
    const auto matrix = report.total_confusion();
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      confusion += std::to_string(report.classes[r]);
      long long row_total = 0;
      for (long long cell : matrix[r]) row_total += cell;
      const double row_denom = row_total > 0 ? static_cast<double>(row_total) : 1.0;
      for (long long cell : matrix[r]) confusion += "," + fixed2(100.0 * cell / row_denom);
      confusion += "\n";
    }
    return {{"summary.csv", summary}, {"weights.csv", weights}, {"confusion.csv", confusion}};
  }

  throw std::invalid_argument("unknown report format '" + format + "'");
}

}  // namespace fewbit
