#pragma once

// Shared fixture builders for the unit and acceptance suites.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fewbit/solver.hpp"

namespace test_helpers {

inline fewbit::MilpModel random_model(std::mt19937_64& gen) {
  using namespace fewbit;
  MilpModel model;
  std::uniform_int_distribution<int> var_count(2, 10);
  std::uniform_int_distribution<int> role_pick(0, 6);
  std::uniform_real_distribution<double> real(-10.0, 10.0);
  std::uniform_int_distribution<int> coin(0, 1);

  const int n = var_count(gen);
  for (int i = 0; i < n; ++i) {
    Variable v;
    switch (role_pick(gen)) {
      case 0: v.name = w_name(i, 0, 0); break;
      case 1: v.name = u_name(i, 1, 0); break;
      case 2: v.name = c_name(i, 0, 1, 0); break;
      case 3: v.name = q_name(i, 0); break;
      case 4: v.name = yhat_name(i, 0); break;
      case 5: v.name = m_name(i, 0); break;
      default: v.name = v_name(i, 0, 0); break;
    }
    std::tie(v.role, v.index) = parse_var_name(v.name);
    const int kind = role_pick(gen) % 3;
    v.kind = kind == 0 ? VarKind::Binary : kind == 1 ? VarKind::Integer : VarKind::Continuous;
    if (v.kind == VarKind::Binary) {
      v.lower = 0.0;
      v.upper = coin(gen) ? 1.0 : 0.0;
    } else if (v.kind == VarKind::Integer) {
      v.lower = std::floor(real(gen));
      v.upper = v.lower + std::abs(std::floor(real(gen)));
    } else {
      v.lower = real(gen);
      v.upper = v.lower + std::abs(real(gen));
    }
    model.add_variable(std::move(v));
  }

  std::uniform_int_distribution<int> row_count(1, 8);
  std::uniform_int_distribution<int> term_count(0, 5);
  std::uniform_int_distribution<int> var_pick(0, n - 1);
  const int rows = row_count(gen);
  for (int r = 0; r < rows; ++r) {
    LinearRow row;
    row.name = "r" + std::to_string(r);
    const int terms = term_count(gen);
    for (int t = 0; t < terms; ++t) row.terms.push_back({var_pick(gen), real(gen)});
    row.sense = static_cast<RowSense>(role_pick(gen) % 3);
    row.rhs = real(gen);
    model.add_row(std::move(row));
  }
  std::vector<LinTerm> objective;
  const int obj_terms = term_count(gen);
  for (int t = 0; t < obj_terms; ++t) objective.push_back({var_pick(gen), real(gen)});
  model.set_objective(coin(gen) ? ObjSense::Maximize : ObjSense::Minimize,
                      std::move(objective));
  return model;
}

using TermKey = std::multiset<std::pair<std::string, double>>;

inline TermKey term_key(const fewbit::MilpModel& model,
                        const std::vector<fewbit::LinTerm>& terms) {
  TermKey key;
  for (const auto& term : terms) key.emplace(model.variable(term.var).name, term.coef);
  return key;
}

/// Structural equality up to variable/row order; returns a description of
/// the first mismatch, empty when equal.
inline std::string model_mismatch(const fewbit::MilpModel& a, const fewbit::MilpModel& b) {
  using namespace fewbit;
  if (a.variable_count() != b.variable_count()) return "variable count differs";
  for (const auto& va : a.variables()) {
    const int id = b.find_variable(va.name);
    if (id < 0) return "missing variable " + va.name;
    const Variable& vb = b.variable(id);
    if (va.kind != vb.kind) return "kind differs for " + va.name;
    if (va.lower != vb.lower || va.upper != vb.upper) return "bounds differ for " + va.name;
    if (va.role != vb.role) return "role differs for " + va.name;
  }
  if (a.row_count() != b.row_count()) return "row count differs";
  using RowKey = std::tuple<std::string, TermKey, int, double>;
  std::multiset<RowKey> rows_a, rows_b;
  for (const auto& row : a.rows()) {
    rows_a.emplace(row.name, term_key(a, row.terms), static_cast<int>(row.sense), row.rhs);
  }
  for (const auto& row : b.rows()) {
    rows_b.emplace(row.name, term_key(b, row.terms), static_cast<int>(row.sense), row.rhs);
  }
  if (rows_a != rows_b) return "row multisets differ";
  if (a.objective_sense() != b.objective_sense()) return "objective sense differs";
  if (term_key(a, a.objective()) != term_key(b, b.objective())) return "objective differs";
  return "";
}

inline void push_be32(std::vector<unsigned char>& bytes, std::uint32_t value) {
  bytes.push_back((value >> 24) & 0xff);
  bytes.push_back((value >> 16) & 0xff);
  bytes.push_back((value >> 8) & 0xff);
  bytes.push_back(value & 0xff);
}

inline std::vector<unsigned char> idx_images(std::uint32_t count, std::uint32_t rows,
                                             std::uint32_t cols,
                                             const std::vector<unsigned char>& pixels) {
  std::vector<unsigned char> bytes;
  push_be32(bytes, 0x00000803);
  push_be32(bytes, count);
  push_be32(bytes, rows);
  push_be32(bytes, cols);
  bytes.insert(bytes.end(), pixels.begin(), pixels.end());
  return bytes;
}

inline std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> bytes;
  push_be32(bytes, 0x00000801);
  push_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  return bytes;
}

}  // namespace test_helpers
