#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fewbit/model.hpp"

namespace fewbit {

enum class VarKind { Binary, Integer, Continuous };

/// Role tags for the stage-model variables: link weights (w), neuron
/// indicators (u), propagated products (c), per-sample correctness bits (q),
/// output predictions (yhat), per-neuron margins (m), link-use flags (v).
enum class VarRole { Weight, Indicator, Product, Correct, Prediction, Margin, Link, Other };

enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class ObjSense { Minimize, Maximize };

struct Variable {
  std::string name;
  VarRole role = VarRole::Other;
  std::vector<int> index;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = 0.0;
};

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

struct LinearRow {
  std::string name;
  std::vector<LinTerm> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

/// Solver-agnostic MILP: variables with bounds, linear rows, one linear
/// objective, and optional warm-start values keyed by variable id.
class MilpModel {
 public:
  int add_variable(Variable v);
  void add_row(LinearRow row);
  void set_objective(ObjSense sense, std::vector<LinTerm> terms);
  void set_warm(int var, double value);

  int variable_count() const { return static_cast<int>(vars_.size()); }
  int row_count() const { return static_cast<int>(rows_.size()); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  ObjSense objective_sense() const { return obj_sense_; }
  const std::vector<LinTerm>& objective() const { return obj_; }
  const std::map<int, double>& warm_values() const { return warm_; }
  bool has_warm() const { return !warm_.empty(); }

  /// -1 when absent.
  int find_variable(std::string_view name) const;
  const Variable& variable(int id) const { return vars_.at(id); }

  double objective_value(std::span<const double> values) const;

  /// Structural checks: row terms reference declared variables, bounds are
  /// ordered, binaries sit in [0,1], warm values respect bounds.
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearRow> rows_;
  ObjSense obj_sense_ = ObjSense::Minimize;
  std::vector<LinTerm> obj_;
  std::map<int, double> warm_;
  std::map<std::string, int, std::less<>> by_name_;
};

/// Violation summary from re-evaluating a model at a candidate point.
struct FeasibilityReport {
  double max_violation = 0.0;
  std::string worst;  // row or bound name
  bool ok(double tol) const { return max_violation <= tol; }
};

FeasibilityReport check_feasibility(const MilpModel& model, std::span<const double> values);

/// Rounds integer/binary variables in place. Returns the largest distance
/// from integrality seen before rounding.
double round_integer_values(const MilpModel& model, std::span<double> values);

// Canonical variable names; the name encodes role and index bijectively.
std::string w_name(int l, int i, int j);
std::string u_name(int k, int l, int j);
std::string c_name(int k, int i, int l, int j);
std::string q_name(int k, int j);
std::string yhat_name(int k, int j);
std::string m_name(int l, int j);
std::string v_name(int l, int i, int j);

/// Recovers (role, index tuple) from a canonical name; Other/“empty” for
/// foreign names.
std::pair<VarRole, std::vector<int>> parse_var_name(std::string_view name);

/// Strict-inequality offset and its derived output-layer counterpart.
struct Tolerances {
  double epsilon = 0.1;

  double epsilon_hat(int weight_bound, int n_last_hidden) const {
    return epsilon / (2.0 * weight_bound * (n_last_hidden + 1));
  }
};

/// Defaults used throughout: 0.1 for integer-valued data, 1e-6 for
/// continuous data.
Tolerances default_tolerances(bool integer_data);

// Domain-box constants shared by the builders and their tests.
// capacity(l) = sup |sum_i c_{ilj}| over the variable box.
double layer_capacity(const Architecture& arch, int layer, double data_bound);
double margin_upper(const Architecture& arch, int layer, double data_bound);
double indicator_big_m(const Architecture& arch, int layer, double data_bound, double epsilon);
double margin_big_m(const Architecture& arch, int layer, double data_bound, double epsilon);
// 2 / (P * (n_{L-1} + 1)): rescales the output-layer sum into a prediction.
double prediction_scale(const Architecture& arch);
double prediction_bound(const Architecture& arch, double data_bound);

/// Two rows encoding (b=1 => expr `sense` threshold) together with the
/// complementary strict side (b=0 => expr beyond threshold by
/// strict_offset). big_m must cover the expression range over its box.
std::pair<LinearRow, LinearRow> linearize_indicator(int binary_var,
                                                    std::span<const LinTerm> expr,
                                                    RowSense sense, double threshold,
                                                    double strict_offset, double big_m);

/// Four rows pinning c = (2u - 1) * w for binary u and integer w in [-P, P].
std::array<LinearRow, 4> linearize_bilinear(int c_var, int u_var, int w_var, int weight_bound);

/// Stage models. Data layout conventions: sample k is data[k]; layers are
/// 1-based; neuron indices 0-based.
MilpModel build_sm(const Architecture& arch, std::span<const LabeledSample> data,
                   const Tolerances& tol);

/// SM with the objective locked to at least min_correct_bits and, for every
/// sample whose correctness bits are all 1, the active-side neuron rows
/// tightened from 0 to epsilon (coupled through one and-bit per sample).
/// Used to steer the stage onto a margin-compatible representative among
/// equally-good incumbents; its own objective maximizes the count of fully
/// correct samples.
MilpModel build_sm_polish(const Architecture& arch, std::span<const LabeledSample> data,
                          const Tolerances& tol, long long min_correct_bits);

MilpModel build_mm(const Architecture& arch, std::span<const LabeledSample> data_that,
                   const Tolerances& tol, const WeightAssignment* warm);

MilpModel build_mw(const Architecture& arch, std::span<const LabeledSample> data_that,
                   const std::vector<std::vector<double>>& fixed_margins,
                   const Tolerances& tol, const WeightAssignment* warm);

}  // namespace fewbit
