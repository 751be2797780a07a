#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "fewbit/inference.hpp"
#include "fewbit/milp.hpp"

using namespace fewbit;

namespace {

double eval_terms(const LinearRow& row, const std::vector<double>& values) {
  double lhs = 0.0;
  for (const auto& term : row.terms) lhs += term.coef * values[term.var];
  return lhs;
}

bool row_holds(const LinearRow& row, const std::vector<double>& values) {
  const double lhs = eval_terms(row, values);
  switch (row.sense) {
    case RowSense::LessEqual: return lhs <= row.rhs + 1e-9;
    case RowSense::GreaterEqual: return lhs >= row.rhs - 1e-9;
    case RowSense::Equal: return std::abs(lhs - row.rhs) <= 1e-9;
  }
  return false;
}

int count_role(const MilpModel& model, VarRole role) {
  int count = 0;
  for (const auto& v : model.variables()) {
    if (v.role == role) ++count;
  }
  return count;
}

const std::vector<LabeledSample> kTinySamples = {{{3, -1}, {1}}};

}  // namespace

TEST_SUITE("milp") {

TEST_CASE("SM variable census for [2,2,1], one sample") {
  const Architecture arch({2, 2, 1}, 1);
  const MilpModel model = build_sm(arch, kTinySamples, Tolerances{0.1});
  CHECK(count_role(model, VarRole::Weight) == 6);
  CHECK(count_role(model, VarRole::Indicator) == 2);
  CHECK(count_role(model, VarRole::Correct) == 1);
  CHECK(count_role(model, VarRole::Prediction) == 1);
  CHECK(count_role(model, VarRole::Product) == 6);
  model.validate();
}

TEST_CASE("SM weight variable count for the wide architecture") {
  const Architecture arch({784, 4, 4, 1}, 1);
  std::vector<LabeledSample> data = {{std::vector<double>(784, 1.0), {1}}};
  const MilpModel model = build_sm(arch, data, Tolerances{0.1});
  CHECK(count_role(model, VarRole::Weight) == 3156);
}

TEST_CASE("variable and constraint counts are pure functions of arch and t") {
  const Architecture arch({3, 2, 2}, 2);
  for (int t : {1, 2, 5}) {
    std::vector<LabeledSample> data(t, {{1, 0, 2}, {1, -1}});
    const MilpModel model = build_sm(arch, data, Tolerances{0.1});
    const long long links = arch.total_links();
    const int hidden = 2;
    const int n_out = 2;
    CHECK(model.variable_count() == links + t * (hidden + links + 2 * n_out));
    const int expected_rows = t * (n_out        // prediction link
                                   + 2 * n_out  // correctness implications
                                   + 2 * hidden // neuron indicators
                                   + 3 * 2      // first-layer products
                                   + 4 * 2 * 2  // bilinear gadgets
                                  );
    CHECK(model.row_count() == expected_rows);
  }
}

TEST_CASE("SM rejects bad inputs") {
  const Architecture arch({2, 2, 1}, 1);
  CHECK_THROWS_AS(build_sm(arch, {}, Tolerances{0.1}), std::invalid_argument);
  const std::vector<LabeledSample> wrong_width = {{{1, 2, 3}, {1}}};
  CHECK_THROWS_AS(build_sm(arch, wrong_width, Tolerances{0.1}), std::invalid_argument);
  const std::vector<LabeledSample> wrong_bits = {{{1, 2}, {0}}};
  CHECK_THROWS_AS(build_sm(arch, wrong_bits, Tolerances{0.1}), std::invalid_argument);
}

TEST_CASE("big-M constants follow the domain boxes") {
  const Architecture arch2({2, 4, 1}, 1);
  CHECK(indicator_big_m(arch2, 1, 7.0, 0.1) == doctest::Approx(14.1));
  CHECK(indicator_big_m(arch2, 2, 7.0, 0.1) == doctest::Approx(4.1));
  const Architecture arch3({5, 4, 3, 1}, 2);
  CHECK(layer_capacity(arch3, 1, 3.0) == doctest::Approx(5 * 2 * 3));
  CHECK(layer_capacity(arch3, 2, 3.0) == doctest::Approx(4 * 2));
  CHECK(margin_big_m(arch3, 2, 3.0, 0.1) == doctest::Approx(8 + 0.1 + 8));
}

TEST_CASE("derived tolerance and prediction scale") {
  const Architecture arch({784, 4, 4, 1}, 1);
  CHECK(Tolerances{0.1}.epsilon_hat(1, 4) == doctest::Approx(0.1 / 10.0));
  CHECK(prediction_scale(arch) == doctest::Approx(2.0 / 5.0));
  const Architecture inn({13, 5, 1}, 7);
  CHECK(Tolerances{1e-6}.epsilon_hat(7, 5) == doctest::Approx(1e-6 / 84.0));
  CHECK(prediction_scale(inn) == doctest::Approx(2.0 / 42.0));
  CHECK(default_tolerances(true).epsilon == doctest::Approx(0.1));
  CHECK(default_tolerances(false).epsilon == doctest::Approx(1e-6));
}

TEST_CASE("bilinear gadget pins c = (2u-1)w exactly") {
  for (int p = 1; p <= 3; ++p) {
    const auto rows = linearize_bilinear(0, 1, 2, p);
    for (int u = 0; u <= 1; ++u) {
      for (int w = -p; w <= p; ++w) {
        int feasible_count = 0;
        int feasible_c = 0;
        for (int c = -p; c <= p; ++c) {
          const std::vector<double> point = {static_cast<double>(c), static_cast<double>(u),
                                             static_cast<double>(w)};
          bool ok = true;
          for (const auto& row : rows) ok = ok && row_holds(row, point);
          if (ok) {
            ++feasible_count;
            feasible_c = c;
          }
        }
        CHECK(feasible_count == 1);
        CHECK(feasible_c == (2 * u - 1) * w);
      }
    }
  }
}

TEST_CASE("bilinear spot checks") {
  const auto rows3 = linearize_bilinear(0, 1, 2, 3);
  auto only_c = [&](int u, int w) {
    for (int c = -3; c <= 3; ++c) {
      const std::vector<double> point = {static_cast<double>(c), static_cast<double>(u),
                                         static_cast<double>(w)};
      bool ok = true;
      for (const auto& row : rows3) ok = ok && row_holds(row, point);
      if (ok) return c;
    }
    return 99;
  };
  CHECK(only_c(1, -3) == -3);
  CHECK(only_c(0, 2) == -2);
}

TEST_CASE("indicator gadget equals the logical relation on integer boxes") {
  const double eps = 0.1;
  for (int n = 1; n <= 3; ++n) {
    for (int p = 1; p <= 3; ++p) {
      std::vector<LinTerm> expr;
      for (int i = 0; i < n; ++i) expr.push_back({i + 1, 1.0});
      const double big_m = n * p + eps;
      const auto [on, off] =
          linearize_indicator(0, expr, RowSense::GreaterEqual, 0.0, eps, big_m);

      std::vector<int> point(n, -p);
      while (true) {
        double sum = 0.0;
        for (int c : point) sum += c;
        for (int b = 0; b <= 1; ++b) {
          std::vector<double> values = {static_cast<double>(b)};
          for (int c : point) values.push_back(c);
          const bool relation = b == 1 ? sum >= 0.0 : sum <= -eps;
          const bool gadget = row_holds(on, values) && row_holds(off, values);
          CHECK(gadget == relation);
        }
        int pos = 0;
        while (pos < n && point[pos] == p) point[pos++] = -p;
        if (pos == n) break;
        ++point[pos];
      }
    }
  }
}

TEST_CASE("indicator gadget with empty support reduces to threshold sign checks") {
  const auto [on, off] =
      linearize_indicator(0, {}, RowSense::GreaterEqual, 0.5, 0.1, 2.0);
  // b=1 forces 0 >= 0.5 (false); b=0 forces 0 <= 0.4 (true)
  CHECK(!(row_holds(on, {1.0}) && row_holds(off, {1.0})));
  CHECK((row_holds(on, {0.0}) && row_holds(off, {0.0})));
}

TEST_CASE("indicator gadget rejects nonpositive big-M") {
  const std::vector<LinTerm> expr = {{1, 1.0}};
  CHECK_THROWS_AS(linearize_indicator(0, expr, RowSense::GreaterEqual, 0.0, 0.1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(linearize_indicator(0, expr, RowSense::Equal, 0.0, 0.1, 1.0),
                  std::invalid_argument);
}

TEST_CASE("MM margin census and bounds") {
  const Architecture arch({784, 4, 4, 1}, 1);
  std::vector<LabeledSample> data = {{std::vector<double>(784, 1.0), {1}}};
  const MilpModel model = build_mm(arch, data, Tolerances{0.1}, nullptr);
  CHECK(count_role(model, VarRole::Margin) == 9);
  for (const auto& v : model.variables()) {
    if (v.role == VarRole::Margin) {
      CHECK(v.lower == doctest::Approx(0.1));
      CHECK(v.upper >= v.lower);
    }
  }
}

TEST_CASE("MW link census matches total links") {
  const Architecture arch({784, 10, 3, 1}, 1);
  std::vector<LabeledSample> data = {{std::vector<double>(784, 1.0), {1}}};
  std::vector<std::vector<double>> margins = {std::vector<double>(10, 0.1),
                                              std::vector<double>(3, 0.1),
                                              std::vector<double>(1, 0.1)};
  const MilpModel model = build_mw(arch, data, margins, Tolerances{0.1}, nullptr);
  CHECK(count_role(model, VarRole::Link) == 7873);
}

TEST_CASE("MW rejects margins below epsilon") {
  const Architecture arch({2, 2, 1}, 1);
  std::vector<std::vector<double>> margins = {{0.05, 0.1}, {0.1}};
  CHECK_THROWS_AS(build_mw(arch, kTinySamples, margins, Tolerances{0.1}, nullptr),
                  std::invalid_argument);
}

TEST_CASE("MW coupling forces w to zero when v is zero") {
  const Architecture arch({2, 2, 1}, 1);
  std::vector<std::vector<double>> margins = {{0.1, 0.1}, {0.1}};
  const MilpModel model = build_mw(arch, kTinySamples, margins, Tolerances{0.1}, nullptr);
  const int w_var = model.find_variable(w_name(1, 0, 0));
  const int v_var = model.find_variable(v_name(1, 0, 0));
  REQUIRE(w_var >= 0);
  REQUIRE(v_var >= 0);
  std::vector<double> values(model.variable_count(), 0.0);
  auto coupling_holds = [&](double w, double v) {
    values[w_var] = w;
    values[v_var] = v;
    bool ok = true;
    for (const auto& row : model.rows()) {
      if (row.name == "vlo_1_0_0" || row.name == "vhi_1_0_0") {
        ok = ok && row_holds(row, values);
      }
    }
    return ok;
  };
  CHECK(coupling_holds(0, 0));
  CHECK(!coupling_holds(1, 0));
  CHECK(!coupling_holds(-1, 0));
  CHECK(coupling_holds(1, 1));
}

TEST_CASE("a margin-compatible point satisfies the full MM model as a warm start") {
  const Architecture arch({2, 2, 1}, 1);
  // first neuron reads feature 0, second negates feature 1, output sums both
  WeightAssignment w(arch);
  w.set(1, 0, 0, 1);
  w.set(1, 1, 1, -1);
  w.set(2, 0, 0, 1);
  w.set(2, 1, 0, 1);
  const std::vector<LabeledSample> data = {{{3, -1}, {1}}, {{2, -2}, {1}}};
  const MilpModel model = build_mm(arch, data, Tolerances{0.1}, &w);
  REQUIRE(model.warm_values().size() == static_cast<std::size_t>(model.variable_count()));
  std::vector<double> point(model.variable_count());
  for (const auto& [var, value] : model.warm_values()) point[var] = value;
  CHECK(check_feasibility(model, point).ok(1e-6));
}

TEST_CASE("an MM point with links derived from the weights is MW-feasible") {
  const Architecture arch({2, 2, 1}, 1);
  WeightAssignment w(arch);
  w.set(1, 0, 0, 1);
  w.set(1, 1, 1, -1);
  w.set(2, 0, 0, 1);
  w.set(2, 1, 0, 1);
  const std::vector<LabeledSample> data = {{{3, -1}, {1}}, {{2, -2}, {1}}};
  const auto implied = implied_margins(arch, w, data);
  const MilpModel model = build_mw(arch, data, implied, Tolerances{0.1}, &w);
  REQUIRE(model.warm_values().size() == static_cast<std::size_t>(model.variable_count()));
  std::vector<double> point(model.variable_count());
  for (const auto& [var, value] : model.warm_values()) point[var] = value;
  CHECK(check_feasibility(model, point).ok(1e-6));
}

TEST_CASE("model guards duplicate names and foreign references") {
  MilpModel model;
  model.add_variable({"x", VarRole::Other, {}, VarKind::Continuous, 0.0, 1.0});
  CHECK_THROWS_AS(model.add_variable({"x", VarRole::Other, {}, VarKind::Continuous, 0.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(model.add_row({"r", {{5, 1.0}}, RowSense::LessEqual, 0.0}),
                  std::invalid_argument);
  model.set_warm(0, 0.5);
  model.validate();
  model.set_warm(0, 7.0);
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
}

TEST_CASE("canonical names round-trip role and index") {
  auto check_name = [](const std::string& name, VarRole role, std::vector<int> index) {
    const auto [r, idx] = parse_var_name(name);
    CHECK(r == role);
    CHECK(idx == index);
  };
  check_name(w_name(1, 0, 3), VarRole::Weight, {1, 0, 3});
  check_name(u_name(7, 2, 0), VarRole::Indicator, {7, 2, 0});
  check_name(c_name(7, 1, 2, 0), VarRole::Product, {7, 1, 2, 0});
  check_name(q_name(4, 1), VarRole::Correct, {4, 1});
  check_name(yhat_name(4, 1), VarRole::Prediction, {4, 1});
  check_name(m_name(2, 3), VarRole::Margin, {2, 3});
  check_name(v_name(3, 2, 1), VarRole::Link, {3, 2, 1});
  CHECK(parse_var_name("zeta_1").first == VarRole::Other);
  CHECK(parse_var_name("x").first == VarRole::Other);
}

}  // TEST_SUITE
