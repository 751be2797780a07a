#include <doctest.h>

#include <stdexcept>

#include "fewbit/report.hpp"

using namespace fewbit;

namespace {

RunMetrics sample_run(std::uint64_t seed) {
  RunMetrics run;
  run.seed = seed;
  run.member_count = 2;
  run.total_links_per_member = 6;
  run.test_size = 8;
  run.correct_pct = 75.0;
  run.wrong_pct = 12.5;
  run.unclassified_pct = 12.5;
  run.status_pct = {{"1C", 75.0}, {"1I", 12.5}, {"oI'", 12.5}};
  run.sm_time_s = 0.5;
  run.mm_gap_mean_pct = 10.0 + seed;
  run.mm_gap_max_pct = 20.0 + seed;
  run.links_pct_after_mm = 50.0;
  run.links_pct_after_mw = 25.0;
  run.active_links = 1.5;
  run.sm_train_accuracy_pct = 100.0;
  run.weight_histogram = {3, 7, 2};  // P = 1: values -1, 0, +1 over 2 members
  run.confusion = {{3, 0, 1}, {0, 3, 1}};
  return run;
}

ExperimentReport sample_report() {
  ExperimentReport report;
  report.experiment = "pair";
  report.dataset = "synthetic";
  report.classes = {1, 8};
  report.subset_size = 2;
  report.layer_sizes = {2, 2, 1};
  report.weight_bound = 1;
  report.images_per_class = 4;
  report.test_per_class = 4;
  report.stages = "sm+mm+mw";
  report.budget_sm_s = 10;
  report.budget_mm_s = 10;
  report.budget_mw_s = 5;
  report.seeds = {1, 2};
  report.runs = {sample_run(1), sample_run(2)};
  return report;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("aggregates cover mean, min and max") {
  const ExperimentReport report = sample_report();
  const MetricStats gap = report.stat(&RunMetrics::mm_gap_mean_pct);
  CHECK(gap.mean == doctest::Approx(11.5));
  CHECK(gap.min == doctest::Approx(11.0));
  CHECK(gap.max == doctest::Approx(12.0));
  const MetricStats one_c = report.status_stat("1C");
  CHECK(one_c.mean == doctest::Approx(75.0));
}

TEST_CASE("report invariants hold for consistent runs") {
  sample_report().validate();
}

TEST_CASE("percentage drift is rejected") {
  ExperimentReport report = sample_report();
  report.runs[0].wrong_pct = 20.0;  // now sums to 107.5
  CHECK_THROWS_AS(report.validate(), std::logic_error);
}

TEST_CASE("histogram totals must match links times members") {
  ExperimentReport report = sample_report();
  report.runs[0].weight_histogram = {3, 7, 3};  // 13 != 12
  CHECK_THROWS_AS(report.validate(), std::logic_error);
}

TEST_CASE("confusion totals must match the test size") {
  ExperimentReport report = sample_report();
  report.runs[0].confusion[0][0] = 2;
  CHECK_THROWS_AS(report.validate(), std::logic_error);
}

TEST_CASE("json emission carries the table fields") {
  const auto docs = emit_report(sample_report(), "json");
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].first == "report.json");
  const std::string& body = docs[0].second;
  CHECK(body.find("\"correct_pct\"") != std::string::npos);
  CHECK(body.find("\"2I'\"") != std::string::npos);
  CHECK(body.find("\"weight_histogram\"") != std::string::npos);
  CHECK(body.find("\"confusion_counts\"") != std::string::npos);
  CHECK(body.find("75.0") != std::string::npos);
}

TEST_CASE("csv emission produces the three table documents") {
  const auto docs = emit_report(sample_report(), "csv");
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].first == "summary.csv");
  CHECK(docs[0].second.find("correct,wrong,n.l.,1C,1I,2C,2I',2I'',oI',oI''") !=
        std::string::npos);
  CHECK(docs[0].second.find("mean,4,75.00,12.50,12.50") != std::string::npos);
  CHECK(docs[1].first == "weights.csv");
  CHECK(docs[1].second.find("value_of_p,w=-P,w=0,w=P,others") != std::string::npos);
  // P = 1 renders the others bucket as a dash
  CHECK(docs[1].second.find(",-\n") != std::string::npos);
  CHECK(docs[2].first == "confusion.csv");
  CHECK(docs[2].second.find("actual,pred_1,pred_8,n.l.") != std::string::npos);
}

TEST_CASE("a zero-row report is still valid and emittable") {
  ExperimentReport report = sample_report();
  for (auto& run : report.runs) {
    run.test_size = 0;
    run.correct_pct = run.wrong_pct = run.unclassified_pct = 0.0;
    run.status_pct.clear();
    run.confusion = {{0, 0, 0}, {0, 0, 0}};
  }
  report.validate();
  CHECK(!emit_report(report, "json").empty());
  CHECK(!emit_report(report, "csv").empty());
}

TEST_CASE("unknown formats are rejected") {
  CHECK_THROWS_AS(emit_report(sample_report(), "xml"), std::invalid_argument);
}

}  // TEST_SUITE
