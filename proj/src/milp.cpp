#include "fewbit/milp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "fewbit/inference.hpp"

namespace fewbit {

namespace {

std::string join_indices(std::string_view prefix, std::initializer_list<int> idx) {
  std::string out(prefix);
  for (int v : idx) {
    out.push_back('_');
    out += std::to_string(v);
  }
  return out;
}

void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}

}  // namespace

int MilpModel::add_variable(Variable v) {
  require(v.lower <= v.upper, "variable bounds are inverted");
  if (v.kind == VarKind::Binary) {
    require(v.lower >= 0.0 && v.upper <= 1.0, "binary variable outside [0,1]");
  }
  auto [it, inserted] = by_name_.emplace(v.name, static_cast<int>(vars_.size()));
  require(inserted, "duplicate variable name");
  vars_.push_back(std::move(v));
  return it->second;
}

void MilpModel::add_row(LinearRow row) {
  for (const auto& term : row.terms) {
    require(term.var >= 0 && term.var < static_cast<int>(vars_.size()),
            "row references an undeclared variable");
  }
  rows_.push_back(std::move(row));
}

void MilpModel::set_objective(ObjSense sense, std::vector<LinTerm> terms) {
  for (const auto& term : terms) {
    require(term.var >= 0 && term.var < static_cast<int>(vars_.size()),
            "objective references an undeclared variable");
  }
  obj_sense_ = sense;
  obj_ = std::move(terms);
}

void MilpModel::set_warm(int var, double value) {
  require(var >= 0 && var < static_cast<int>(vars_.size()), "warm value for unknown variable");
  warm_[var] = value;
}

int MilpModel::find_variable(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

double MilpModel::objective_value(std::span<const double> values) const {
  double total = 0.0;
  for (const auto& term : obj_) total += term.coef * values[term.var];
  return total;
}

void MilpModel::validate() const {
  for (const auto& v : vars_) {
    require(v.lower <= v.upper, "variable bounds are inverted");
    if (v.kind != VarKind::Continuous) {
      require(std::abs(v.lower - std::round(v.lower)) < 1e-9 &&
                  std::abs(v.upper - std::round(v.upper)) < 1e-9,
              "integral variable with fractional bounds");
    }
  }
  for (const auto& [var, value] : warm_) {
    const auto& v = vars_.at(var);
    require(value >= v.lower - 1e-9 && value <= v.upper + 1e-9,
            "warm value outside variable bounds");
  }
}

FeasibilityReport check_feasibility(const MilpModel& model, std::span<const double> values) {
  FeasibilityReport report;
  auto note = [&](double violation, const std::string& name) {
    if (violation > report.max_violation) {
      report.max_violation = violation;
      report.worst = name;
    }
  };
  const auto& vars = model.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    note(vars[i].lower - values[i], vars[i].name);
    note(values[i] - vars[i].upper, vars[i].name);
    if (vars[i].kind != VarKind::Continuous) {
      note(std::abs(values[i] - std::round(values[i])), vars[i].name);
    }
  }
  for (const auto& row : model.rows()) {
    double lhs = 0.0, scale = 1.0;
    for (const auto& term : row.terms) {
      lhs += term.coef * values[term.var];
      scale = std::max(scale, std::abs(term.coef * values[term.var]));
    }
    double violation = 0.0;
    switch (row.sense) {
      case RowSense::LessEqual: violation = lhs - row.rhs; break;
      case RowSense::GreaterEqual: violation = row.rhs - lhs; break;
      case RowSense::Equal: violation = std::abs(lhs - row.rhs); break;
    }
    note(violation / scale, row.name);
  }
  return report;
}

double round_integer_values(const MilpModel& model, std::span<double> values) {
  double worst = 0.0;
  const auto& vars = model.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].kind == VarKind::Continuous) continue;
    const double rounded = std::round(values[i]);
    worst = std::max(worst, std::abs(values[i] - rounded));
    values[i] = rounded;
  }
  return worst;
}

std::string w_name(int l, int i, int j) { return join_indices("w", {l, i, j}); }
std::string u_name(int k, int l, int j) { return join_indices("u", {k, l, j}); }
std::string c_name(int k, int i, int l, int j) { return join_indices("c", {k, i, l, j}); }
std::string q_name(int k, int j) { return join_indices("q", {k, j}); }
std::string yhat_name(int k, int j) { return join_indices("yhat", {k, j}); }
std::string m_name(int l, int j) { return join_indices("m", {l, j}); }
std::string v_name(int l, int i, int j) { return join_indices("v", {l, i, j}); }

std::pair<VarRole, std::vector<int>> parse_var_name(std::string_view name) {
  const auto split = name.find('_');
  if (split == std::string_view::npos) return {VarRole::Other, {}};
  const std::string_view prefix = name.substr(0, split);
  VarRole role;
  std::size_t arity;
  if (prefix == "w") { role = VarRole::Weight; arity = 3; }
  else if (prefix == "u") { role = VarRole::Indicator; arity = 3; }
  else if (prefix == "c") { role = VarRole::Product; arity = 4; }
  else if (prefix == "q") { role = VarRole::Correct; arity = 2; }
  else if (prefix == "yhat") { role = VarRole::Prediction; arity = 2; }
  else if (prefix == "m") { role = VarRole::Margin; arity = 2; }
  else if (prefix == "v") { role = VarRole::Link; arity = 3; }
  else return {VarRole::Other, {}};

  std::vector<int> index;
  std::string_view rest = name.substr(split + 1);
  while (!rest.empty()) {
    const auto next = rest.find('_');
    const std::string_view token = rest.substr(0, next);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return {VarRole::Other, {}};
    index.push_back(value);
    if (next == std::string_view::npos) break;
    rest = rest.substr(next + 1);
  }
  if (index.size() != arity) return {VarRole::Other, {}};
  return {role, index};
}

Tolerances default_tolerances(bool integer_data) {
  return Tolerances{integer_data ? 0.1 : 1e-6};
}

double layer_capacity(const Architecture& arch, int layer, double data_bound) {
  require(layer >= 1 && layer <= arch.depth(), "layer index out of range");
  const double per_link =
      layer == 1 ? arch.weight_bound * data_bound : static_cast<double>(arch.weight_bound);
  return arch.layer_sizes[layer - 1] * per_link;
}

double margin_upper(const Architecture& arch, int layer, double data_bound) {
  return layer_capacity(arch, layer, data_bound);
}

double indicator_big_m(const Architecture& arch, int layer, double data_bound, double epsilon) {
  return layer_capacity(arch, layer, data_bound) + epsilon;
}

double margin_big_m(const Architecture& arch, int layer, double data_bound, double epsilon) {
  return layer_capacity(arch, layer, data_bound) + epsilon + margin_upper(arch, layer, data_bound);
}

double prediction_scale(const Architecture& arch) {
  const int n = arch.layer_sizes[arch.depth() - 1];
  return 2.0 / (arch.weight_bound * (n + 1));
}

double prediction_bound(const Architecture& arch, double data_bound) {
  return prediction_scale(arch) * layer_capacity(arch, arch.depth(), data_bound);
}

std::pair<LinearRow, LinearRow> linearize_indicator(int binary_var,
                                                    std::span<const LinTerm> expr,
                                                    RowSense sense, double threshold,
                                                    double strict_offset, double big_m) {
  require(big_m > 0.0, "big-M must be positive");
  require(sense != RowSense::Equal, "indicator sense must be an inequality");
  LinearRow active, inactive;
  active.terms.assign(expr.begin(), expr.end());
  inactive.terms.assign(expr.begin(), expr.end());
  if (sense == RowSense::GreaterEqual) {
    active.terms.push_back({binary_var, -big_m});
    active.sense = RowSense::GreaterEqual;
    active.rhs = threshold - big_m;
    inactive.terms.push_back({binary_var, -big_m});
    inactive.sense = RowSense::LessEqual;
    inactive.rhs = threshold - strict_offset;
  } else {
    active.terms.push_back({binary_var, big_m});
    active.sense = RowSense::LessEqual;
    active.rhs = threshold + big_m;
    inactive.terms.push_back({binary_var, big_m});
    inactive.sense = RowSense::GreaterEqual;
    inactive.rhs = threshold + strict_offset;
  }
  return {std::move(active), std::move(inactive)};
}

std::array<LinearRow, 4> linearize_bilinear(int c_var, int u_var, int w_var, int weight_bound) {
  const double two_p = 2.0 * weight_bound;
  std::array<LinearRow, 4> rows;
  rows[0].terms = {{c_var, 1.0}, {w_var, -1.0}, {u_var, -two_p}};
  rows[0].sense = RowSense::GreaterEqual;
  rows[0].rhs = -two_p;
  rows[1].terms = {{c_var, 1.0}, {w_var, -1.0}, {u_var, two_p}};
  rows[1].sense = RowSense::LessEqual;
  rows[1].rhs = two_p;
  rows[2].terms = {{c_var, 1.0}, {w_var, 1.0}, {u_var, two_p}};
  rows[2].sense = RowSense::GreaterEqual;
  rows[2].rhs = 0.0;
  rows[3].terms = {{c_var, 1.0}, {w_var, 1.0}, {u_var, -two_p}};
  rows[3].sense = RowSense::LessEqual;
  rows[3].rhs = 0.0;
  return rows;
}

namespace {

// Variable id tables shared by the three stage models.
struct Skeleton {
  MilpModel model;
  double data_bound = 0.0;
  // w[l-1][i * n_l + j]; u[k][l-1][j] for hidden layers; c[k][l-1][i * n_l + j]
  std::vector<std::vector<int>> w;
  std::vector<std::vector<std::vector<int>>> u;
  std::vector<std::vector<std::vector<int>>> c;
};

void check_stage_data(const Architecture& arch, std::span<const LabeledSample> data) {
  require(!data.empty(), "stage model needs a nonempty training set");
  for (const auto& sample : data) {
    require(static_cast<int>(sample.features.size()) == arch.inputs(),
            "sample feature width does not match the architecture");
    require(static_cast<int>(sample.target_bits.size()) == arch.outputs(),
            "sample target width does not match the architecture");
    for (int bit : sample.target_bits) {
      require(bit == 1 || bit == -1, "target bits must be +1 or -1");
    }
  }
}

// Declares w/u/c variables and the propagation rows (first-layer products
// as equalities, deeper layers through the bilinear gadget).
Skeleton build_skeleton(const Architecture& arch, std::span<const LabeledSample> data) {
  check_stage_data(arch, data);
  Skeleton sk;
  sk.data_bound = compute_data_bound(data).value;
  const int depth = arch.depth();
  const int p = arch.weight_bound;
  const int t = static_cast<int>(data.size());

  sk.w.resize(depth);
  for (int l = 1; l <= depth; ++l) {
    const int n_from = arch.layer_sizes[l - 1];
    const int n_to = arch.layer_sizes[l];
    sk.w[l - 1].resize(static_cast<std::size_t>(n_from) * n_to);
    for (int i = 0; i < n_from; ++i) {
      for (int j = 0; j < n_to; ++j) {
        sk.w[l - 1][static_cast<std::size_t>(i) * n_to + j] = sk.model.add_variable(
            {w_name(l, i, j), VarRole::Weight, {l, i, j}, VarKind::Integer,
             static_cast<double>(-p), static_cast<double>(p)});
      }
    }
  }

  sk.u.resize(t);
  sk.c.resize(t);
  const double first_layer_cap = p * sk.data_bound;
  for (int k = 0; k < t; ++k) {
    sk.u[k].resize(depth > 1 ? depth - 1 : 0);
    for (int l = 1; l < depth; ++l) {
      sk.u[k][l - 1].resize(arch.layer_sizes[l]);
      for (int j = 0; j < arch.layer_sizes[l]; ++j) {
        sk.u[k][l - 1][j] = sk.model.add_variable(
            {u_name(k, l, j), VarRole::Indicator, {k, l, j}, VarKind::Binary, 0.0, 1.0});
      }
    }
    sk.c[k].resize(depth);
    for (int l = 1; l <= depth; ++l) {
      const int n_from = arch.layer_sizes[l - 1];
      const int n_to = arch.layer_sizes[l];
      sk.c[k][l - 1].resize(static_cast<std::size_t>(n_from) * n_to);
      for (int i = 0; i < n_from; ++i) {
        for (int j = 0; j < n_to; ++j) {
          Variable var;
          var.name = c_name(k, i, l, j);
          var.role = VarRole::Product;
          var.index = {k, i, l, j};
          if (l == 1) {
            var.kind = VarKind::Continuous;
            var.lower = -first_layer_cap;
            var.upper = first_layer_cap;
          } else {
            var.kind = VarKind::Integer;
            var.lower = -p;
            var.upper = p;
          }
          sk.c[k][l - 1][static_cast<std::size_t>(i) * n_to + j] =
              sk.model.add_variable(std::move(var));
        }
      }
    }
  }

  for (int k = 0; k < t; ++k) {
    const auto& x = data[k].features;
    const int n1 = arch.layer_sizes[1];
    for (int i = 0; i < arch.inputs(); ++i) {
      for (int j = 0; j < n1; ++j) {
        LinearRow row;
        row.name = join_indices("cx", {k, i, j});
        row.terms = {{sk.c[k][0][static_cast<std::size_t>(i) * n1 + j], 1.0},
                     {sk.w[0][static_cast<std::size_t>(i) * n1 + j], -x[i]}};
        row.sense = RowSense::Equal;
        row.rhs = 0.0;
        sk.model.add_row(std::move(row));
      }
    }
    for (int l = 2; l <= depth; ++l) {
      const int n_from = arch.layer_sizes[l - 1];
      const int n_to = arch.layer_sizes[l];
      for (int i = 0; i < n_from; ++i) {
        for (int j = 0; j < n_to; ++j) {
          const std::size_t flat = static_cast<std::size_t>(i) * n_to + j;
          auto rows = linearize_bilinear(sk.c[k][l - 1][flat], sk.u[k][l - 2][i],
                                         sk.w[l - 1][flat], p);
          for (int r = 0; r < 4; ++r) {
            rows[r].name = join_indices("bl" + std::to_string(r + 1), {k, i, l, j});
            sk.model.add_row(std::move(rows[r]));
          }
        }
      }
    }
  }
  return sk;
}

std::vector<LinTerm> incoming_sum(const Skeleton& sk, const Architecture& arch, int k, int l,
                                  int j) {
  const int n_from = arch.layer_sizes[l - 1];
  const int n_to = arch.layer_sizes[l];
  std::vector<LinTerm> expr;
  expr.reserve(n_from);
  for (int i = 0; i < n_from; ++i) {
    expr.push_back({sk.c[k][l - 1][static_cast<std::size_t>(i) * n_to + j], 1.0});
  }
  return expr;
}

// Hidden-neuron indicator rows. When strict_bit is a variable id, the
// active-side threshold is lifted from 0 to epsilon whenever that binary is
// 1 (the margin-compatibility coupling used by the polish model).
void add_hidden_indicator_rows(Skeleton& sk, const Architecture& arch, const Tolerances& tol,
                               int k, int strict_bit = -1) {
  for (int l = 1; l < arch.depth(); ++l) {
    const double big_m = indicator_big_m(arch, l, sk.data_bound, tol.epsilon);
    for (int j = 0; j < arch.layer_sizes[l]; ++j) {
      const auto expr = incoming_sum(sk, arch, k, l, j);
      auto [on, off] =
          linearize_indicator(sk.u[k][l - 1][j], expr, RowSense::GreaterEqual, 0.0,
                              tol.epsilon, big_m);
      on.name = join_indices("uon", {k, l, j});
      off.name = join_indices("uoff", {k, l, j});
      if (strict_bit >= 0) on.terms.push_back({strict_bit, -tol.epsilon});
      sk.model.add_row(std::move(on));
      sk.model.add_row(std::move(off));
    }
  }
}

// Margin rows for MM (variable margins) or MW (margins fixed to m_hat).
void add_margin_rows(Skeleton& sk, const Architecture& arch, const Tolerances& tol,
                     std::span<const LabeledSample> data,
                     const std::vector<std::vector<int>>* margin_vars,
                     const std::vector<std::vector<double>>* fixed_margins) {
  const int depth = arch.depth();
  const int t = static_cast<int>(data.size());
  for (int k = 0; k < t; ++k) {
    for (int l = 1; l < depth; ++l) {
      const double big_m = margin_big_m(arch, l, sk.data_bound, tol.epsilon);
      for (int j = 0; j < arch.layer_sizes[l]; ++j) {
        if (margin_vars) {
          const int m_var = (*margin_vars)[l - 1][j];
          LinearRow on;
          on.name = join_indices("mon", {k, l, j});
          on.terms = incoming_sum(sk, arch, k, l, j);
          on.terms.push_back({m_var, -1.0});
          on.terms.push_back({sk.u[k][l - 1][j], -big_m});
          on.sense = RowSense::GreaterEqual;
          on.rhs = -big_m;
          sk.model.add_row(std::move(on));

          LinearRow off;
          off.name = join_indices("moff", {k, l, j});
          off.terms = incoming_sum(sk, arch, k, l, j);
          off.terms.push_back({m_var, 1.0});
          off.terms.push_back({sk.u[k][l - 1][j], -big_m});
          off.sense = RowSense::LessEqual;
          off.rhs = 0.0;
          sk.model.add_row(std::move(off));
        } else {
          const double m_hat = (*fixed_margins)[l - 1][j];
          const auto expr = incoming_sum(sk, arch, k, l, j);
          auto [on, off] = linearize_indicator(sk.u[k][l - 1][j], expr, RowSense::GreaterEqual,
                                               m_hat, 2.0 * m_hat, big_m);
          on.name = join_indices("mon", {k, l, j});
          off.name = join_indices("moff", {k, l, j});
          sk.model.add_row(std::move(on));
          sk.model.add_row(std::move(off));
        }
      }
    }
    for (int j = 0; j < arch.outputs(); ++j) {
      LinearRow out;
      out.name = join_indices("mo", {k, j});
      out.terms = incoming_sum(sk, arch, k, depth, j);
      for (auto& term : out.terms) term.coef = data[k].target_bits[j];
      out.sense = RowSense::GreaterEqual;
      if (margin_vars) {
        out.terms.push_back({(*margin_vars)[depth - 1][j], -1.0});
        out.rhs = 0.0;
      } else {
        out.rhs = (*fixed_margins)[depth - 1][j];
      }
      sk.model.add_row(std::move(out));
    }
  }
}

// Warm values for the skeleton variables derived from a forward pass of the
// given weights; exact for integer data, within float rounding otherwise.
void set_skeleton_warm(Skeleton& sk, const Architecture& arch,
                       std::span<const LabeledSample> data, const WeightAssignment& warm) {
  const int depth = arch.depth();
  for (int l = 1; l <= depth; ++l) {
    const int n_from = arch.layer_sizes[l - 1];
    const int n_to = arch.layer_sizes[l];
    for (int i = 0; i < n_from; ++i) {
      for (int j = 0; j < n_to; ++j) {
        sk.model.set_warm(sk.w[l - 1][static_cast<std::size_t>(i) * n_to + j],
                          warm.at(l, i, j));
      }
    }
  }
  for (int k = 0; k < static_cast<int>(data.size()); ++k) {
    const ActivationTrace trace = forward(arch, warm, data[k].features);
    for (int l = 1; l < depth; ++l) {
      for (int j = 0; j < arch.layer_sizes[l]; ++j) {
        sk.model.set_warm(sk.u[k][l - 1][j], trace.activations[l - 1][j] > 0 ? 1.0 : 0.0);
      }
    }
    for (int l = 1; l <= depth; ++l) {
      const int n_from = arch.layer_sizes[l - 1];
      const int n_to = arch.layer_sizes[l];
      for (int i = 0; i < n_from; ++i) {
        const double z =
            l == 1 ? data[k].features[i] : static_cast<double>(trace.activations[l - 2][i]);
        for (int j = 0; j < n_to; ++j) {
          sk.model.set_warm(sk.c[k][l - 1][static_cast<std::size_t>(i) * n_to + j],
                            z * warm.at(l, i, j));
        }
      }
    }
  }
}

MilpModel build_sm_impl(const Architecture& arch, std::span<const LabeledSample> data,
                        const Tolerances& tol, const long long* min_correct_bits) {
  Skeleton sk = build_skeleton(arch, data);
  const int depth = arch.depth();
  const int t = static_cast<int>(data.size());
  const double scale = prediction_scale(arch);
  const double y_cap = prediction_bound(arch, sk.data_bound);
  const double eps_hat = tol.epsilon_hat(arch.weight_bound, arch.layer_sizes[depth - 1]);
  const double q_big_m = y_cap + 0.5 + eps_hat;
  const bool polish = min_correct_bits != nullptr;

  std::vector<std::vector<int>> yhat(t), q(t);
  std::vector<int> all_bits(t, -1);  // polish only: 1 iff every q of sample k is 1
  for (int k = 0; k < t; ++k) {
    yhat[k].resize(arch.outputs());
    q[k].resize(arch.outputs());
    for (int j = 0; j < arch.outputs(); ++j) {
      yhat[k][j] = sk.model.add_variable({yhat_name(k, j), VarRole::Prediction, {k, j},
                                          VarKind::Continuous, -y_cap, y_cap});
      q[k][j] = sk.model.add_variable(
          {q_name(k, j), VarRole::Correct, {k, j}, VarKind::Binary, 0.0, 1.0});
    }
    if (polish) {
      all_bits[k] = sk.model.add_variable(
          {join_indices("t", {k}), VarRole::Other, {k}, VarKind::Binary, 0.0, 1.0});
    }
  }

  for (int k = 0; k < t; ++k) {
    for (int j = 0; j < arch.outputs(); ++j) {
      LinearRow pred;
      pred.name = join_indices("pred", {k, j});
      pred.terms = incoming_sum(sk, arch, k, depth, j);
      for (auto& term : pred.terms) term.coef = -scale;
      pred.terms.push_back({yhat[k][j], 1.0});
      pred.sense = RowSense::Equal;
      pred.rhs = 0.0;
      sk.model.add_row(std::move(pred));

      const LinTerm agree{yhat[k][j], static_cast<double>(data[k].target_bits[j])};
      auto [on, off] = linearize_indicator(q[k][j], std::span(&agree, 1),
                                           RowSense::GreaterEqual, 0.5, eps_hat, q_big_m);
      on.name = join_indices("qon", {k, j});
      off.name = join_indices("qoff", {k, j});
      sk.model.add_row(std::move(on));
      sk.model.add_row(std::move(off));

      if (polish) {
        LinearRow cap;
        cap.name = join_indices("tq", {k, j});
        cap.terms = {{all_bits[k], 1.0}, {q[k][j], -1.0}};
        cap.sense = RowSense::LessEqual;
        cap.rhs = 0.0;
        sk.model.add_row(std::move(cap));
      }
    }
    if (polish) {
      LinearRow conj;
      conj.name = join_indices("tand", {k});
      conj.terms = {{all_bits[k], 1.0}};
      for (int j = 0; j < arch.outputs(); ++j) conj.terms.push_back({q[k][j], -1.0});
      conj.sense = RowSense::GreaterEqual;
      conj.rhs = 1.0 - arch.outputs();
      sk.model.add_row(std::move(conj));
    }
    add_hidden_indicator_rows(sk, arch, tol, k, polish ? all_bits[k] : -1);
  }

  if (polish) {
    LinearRow lock;
    lock.name = "qlock";
    for (int k = 0; k < t; ++k) {
      for (int j = 0; j < arch.outputs(); ++j) lock.terms.push_back({q[k][j], 1.0});
    }
    lock.sense = RowSense::GreaterEqual;
    lock.rhs = static_cast<double>(*min_correct_bits);
    sk.model.add_row(std::move(lock));
  }

  std::vector<LinTerm> objective;
  if (polish) {
    for (int k = 0; k < t; ++k) objective.push_back({all_bits[k], 1.0});
  } else {
    for (int k = 0; k < t; ++k) {
      for (int j = 0; j < arch.outputs(); ++j) objective.push_back({q[k][j], 1.0});
    }
  }
  sk.model.set_objective(ObjSense::Maximize, std::move(objective));
  return std::move(sk.model);
}

}  // namespace

MilpModel build_sm(const Architecture& arch, std::span<const LabeledSample> data,
                   const Tolerances& tol) {
  return build_sm_impl(arch, data, tol, nullptr);
}

MilpModel build_sm_polish(const Architecture& arch, std::span<const LabeledSample> data,
                          const Tolerances& tol, long long min_correct_bits) {
  require(min_correct_bits >= 0, "the locked objective must be nonnegative");
  return build_sm_impl(arch, data, tol, &min_correct_bits);
}

MilpModel build_mm(const Architecture& arch, std::span<const LabeledSample> data_that,
                   const Tolerances& tol, const WeightAssignment* warm) {
  Skeleton sk = build_skeleton(arch, data_that);
  const int depth = arch.depth();

  std::vector<std::vector<int>> margin_vars(depth);
  for (int l = 1; l <= depth; ++l) {
    margin_vars[l - 1].resize(arch.layer_sizes[l]);
    for (int j = 0; j < arch.layer_sizes[l]; ++j) {
      margin_vars[l - 1][j] =
          sk.model.add_variable({m_name(l, j), VarRole::Margin, {l, j}, VarKind::Continuous,
                                 tol.epsilon, margin_upper(arch, l, sk.data_bound)});
    }
  }

  for (int k = 0; k < static_cast<int>(data_that.size()); ++k) {
    add_hidden_indicator_rows(sk, arch, tol, k);
  }
  add_margin_rows(sk, arch, tol, data_that, &margin_vars, nullptr);

  std::vector<LinTerm> objective;
  for (const auto& layer : margin_vars) {
    for (int var : layer) objective.push_back({var, 1.0});
  }
  sk.model.set_objective(ObjSense::Maximize, std::move(objective));

  if (warm) {
    set_skeleton_warm(sk, arch, data_that, *warm);
    const auto implied = implied_margins(arch, *warm, data_that);
    for (int l = 1; l <= depth; ++l) {
      for (int j = 0; j < arch.layer_sizes[l]; ++j) {
        const double clamped = std::clamp(implied[l - 1][j], tol.epsilon,
                                          margin_upper(arch, l, sk.data_bound));
        sk.model.set_warm(margin_vars[l - 1][j], clamped);
      }
    }
  }
  return std::move(sk.model);
}

MilpModel build_mw(const Architecture& arch, std::span<const LabeledSample> data_that,
                   const std::vector<std::vector<double>>& fixed_margins,
                   const Tolerances& tol, const WeightAssignment* warm) {
  require(static_cast<int>(fixed_margins.size()) == arch.depth(),
          "fixed margins must cover every layer");
  for (int l = 1; l <= arch.depth(); ++l) {
    require(static_cast<int>(fixed_margins[l - 1].size()) == arch.layer_sizes[l],
            "fixed margins must cover every neuron");
    for (double m : fixed_margins[l - 1]) {
      require(m >= tol.epsilon - 1e-12, "fixed margin below epsilon");
    }
  }

  Skeleton sk = build_skeleton(arch, data_that);
  const int depth = arch.depth();
  const int p = arch.weight_bound;

  std::vector<std::vector<int>> link_vars(depth);
  for (int l = 1; l <= depth; ++l) {
    const int n_from = arch.layer_sizes[l - 1];
    const int n_to = arch.layer_sizes[l];
    link_vars[l - 1].resize(static_cast<std::size_t>(n_from) * n_to);
    for (int i = 0; i < n_from; ++i) {
      for (int j = 0; j < n_to; ++j) {
        link_vars[l - 1][static_cast<std::size_t>(i) * n_to + j] = sk.model.add_variable(
            {v_name(l, i, j), VarRole::Link, {l, i, j}, VarKind::Binary, 0.0, 1.0});
      }
    }
  }

  for (int k = 0; k < static_cast<int>(data_that.size()); ++k) {
    add_hidden_indicator_rows(sk, arch, tol, k);
  }
  add_margin_rows(sk, arch, tol, data_that, nullptr, &fixed_margins);

  for (int l = 1; l <= depth; ++l) {
    const int n_from = arch.layer_sizes[l - 1];
    const int n_to = arch.layer_sizes[l];
    for (int i = 0; i < n_from; ++i) {
      for (int j = 0; j < n_to; ++j) {
        const std::size_t flat = static_cast<std::size_t>(i) * n_to + j;
        LinearRow lo;
        lo.name = join_indices("vlo", {l, i, j});
        lo.terms = {{sk.w[l - 1][flat], 1.0}, {link_vars[l - 1][flat], static_cast<double>(p)}};
        lo.sense = RowSense::GreaterEqual;
        lo.rhs = 0.0;
        sk.model.add_row(std::move(lo));
        LinearRow hi;
        hi.name = join_indices("vhi", {l, i, j});
        hi.terms = {{sk.w[l - 1][flat], 1.0}, {link_vars[l - 1][flat], -static_cast<double>(p)}};
        hi.sense = RowSense::LessEqual;
        hi.rhs = 0.0;
        sk.model.add_row(std::move(hi));
      }
    }
  }

  std::vector<LinTerm> objective;
  for (const auto& layer : link_vars) {
    for (int var : layer) objective.push_back({var, 1.0});
  }
  sk.model.set_objective(ObjSense::Minimize, std::move(objective));

  if (warm) {
    set_skeleton_warm(sk, arch, data_that, *warm);
    for (int l = 1; l <= depth; ++l) {
      const int n_from = arch.layer_sizes[l - 1];
      const int n_to = arch.layer_sizes[l];
      for (int i = 0; i < n_from; ++i) {
        for (int j = 0; j < n_to; ++j) {
          sk.model.set_warm(link_vars[l - 1][static_cast<std::size_t>(i) * n_to + j],
                            warm->at(l, i, j) != 0 ? 1.0 : 0.0);
        }
      }
    }
  }
  return std::move(sk.model);
}

}  // namespace fewbit
