#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fewbit/milp.hpp"
#include "fewbit/model.hpp"
#include "fewbit/solver.hpp"

namespace fewbit {

/// Per-stage wall-clock limits in seconds. With rollover on, time left over
/// by a stage that proved optimality is added to the next stage's limit.
struct StageBudget {
  double sm_s = 60.0;
  double mm_s = 60.0;
  double mw_s = 20.0;
  bool rollover = true;
};

enum class StagePlan { SM, SM_MM, SM_MW, SM_MM_MW };

std::string to_string(StagePlan plan);
StagePlan parse_stage_plan(const std::string& text);

struct StageSummary {
  SolveStatus status = SolveStatus::Error;
  double objective = 0.0;
  std::optional<double> mip_gap;
  double wall_time_s = 0.0;
  bool used_warm_fallback = false;
};

struct TrainedNet {
  Architecture arch;
  WeightAssignment weights;  // final stage outcome
  WeightAssignment weights_after_sm;
  std::optional<WeightAssignment> weights_after_mm;
  std::vector<std::vector<double>> fixed_margins;  // set when margins were fixed for MW
  std::vector<int> t_hat;                          // confidently correct sample indices
  std::size_t training_size = 0;
  std::optional<StageSummary> sm, mm, mw;
  bool sm_polished = false;
  std::string stage_reached;  // "SM", "SM+MM", "SM+MW", "SM+MM+MW"

  // Pipeline invariants, re-derived arithmetically after each hand-off
  // rather than read back from the solver.
  bool warm_mm_admissible = false;  // SM point satisfies MM constraints at m = epsilon
  bool warm_mw_admissible = false;  // MM point satisfies MW constraints at fixed margins
  bool margins_verified = false;    // final weights clear the fixed margins on T-hat
  bool pruning_monotone = false;    // nonzeros(final) <= nonzeros(after MM)

  double training_accuracy() const {
    return training_size == 0 ? 0.0
                              : static_cast<double>(t_hat.size()) / training_size;
  }
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainerOptions {
  BackendProfile backend = default_backend();
  /// When the SM incumbent leaves some hidden neuron short of the epsilon
  /// margin on T-hat, spend remaining SM budget steering it onto an
  /// equally-optimal margin-compatible incumbent before warm-starting MM.
  bool polish_margins = true;
};

/// Runs the lexicographic pipeline on one network: SM, the confidently
/// correct filter, then MM and MW restricted to that subset, each stage
/// warm-started from the previous one. If T-hat comes back empty the later
/// stages are skipped and the SM weights returned.
TrainedNet train(const Architecture& arch, std::span<const LabeledSample> data,
                 const Tolerances& tol, const StageBudget& budget, StagePlan plan,
                 const TrainerOptions& options = {});

/// Samples whose correctness bits are all 1 in the SM incumbent.
std::vector<int> compute_t_hat(const MilpModel& sm_model, std::span<const double> values,
                               int sample_count, int output_width);

WeightAssignment extract_weights(const MilpModel& model, std::span<const double> values,
                                 const Architecture& arch);
std::vector<std::vector<double>> extract_margins(const MilpModel& model,
                                                 std::span<const double> values,
                                                 const Architecture& arch);

/// Zeroes links one at a time, keeping only removals after which every
/// neuron still clears `required_margins` on `data`. The result seeds the
/// link-minimization solve with a much sparser incumbent than the dense
/// margin-stage weights.
WeightAssignment greedy_prune(const Architecture& arch, WeightAssignment weights,
                              std::span<const LabeledSample> data,
                              const std::vector<std::vector<double>>& required_margins);

enum class BruteForceObjective { SmCount, MmMarginSum, MwNonzeros };

struct BruteForceResult {
  bool feasible = false;
  double objective = 0.0;
  WeightAssignment weights;
};

/// Exhaustive training oracle for tiny instances: enumerates every weight
/// assignment ((2P+1)^total_links must not exceed 10^7), evaluates the stage
/// objective by direct forward passes, and returns the true optimum.
/// fixed_margins is required for the MwNonzeros objective.
BruteForceResult brute_force_train(
    const Architecture& arch, std::span<const LabeledSample> data, const Tolerances& tol,
    BruteForceObjective objective,
    const std::vector<std::vector<double>>* fixed_margins = nullptr);

}  // namespace fewbit
