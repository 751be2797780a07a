#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fewbit/milp.hpp"

namespace fewbit {

/// How to invoke an external solver process. The command is an argv
/// template; {model_path}, {time_limit}, {solution_path} and {start_path}
/// are substituted per solve. The process must exit 0 after writing the
/// solution document.
struct BackendProfile {
  std::string name;
  std::vector<std::string> command;
  bool missing_value_is_zero = false;
};

/// Built-in backend: a Python driver around scipy's HiGHS-based MILP solver,
/// materialized to a temp file on first use. FEWBIT_BACKEND_CMD overrides it
/// with a custom command template.
BackendProfile default_backend();

struct SolveRequest {
  const MilpModel* model = nullptr;
  double time_limit_s = 60.0;
  BackendProfile backend;
};

enum class SolveStatus { Optimal, FeasibleLimit, Infeasible, NoIncumbent, Error };

std::string to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::vector<double> values;  // aligned with model variable ids; empty if none
  double objective = 0.0;
  std::optional<double> mip_gap;
  double wall_time_s = 0.0;
  bool used_warm_fallback = false;
  std::string message;

  bool has_incumbent() const { return !values.empty(); }
};

/// Serializes, invokes the backend, parses and audits the result. Integer
/// variables are rounded, then every constraint is re-checked arithmetically;
/// an incumbent that fails the audit is discarded. When the model carries a
/// warm start that is itself feasible, the result never degrades below it:
/// the warm point is substituted whenever the backend returns nothing better.
SolveResult solve(const SolveRequest& request);

std::string write_lp(const MilpModel& model);
MilpModel parse_lp(const std::string& text);

/// One `name value` pair per line for the variables with warm values.
std::string write_start_values(const MilpModel& model);

struct ParsedSolution {
  std::string status;
  std::optional<double> objective;
  std::optional<double> mip_gap;
  std::map<std::string, double> values;
};

ParsedSolution parse_solution(const std::string& text);

/// Thrown by the gateway and the data loaders on malformed documents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fewbit
