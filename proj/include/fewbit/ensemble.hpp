#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fewbit/model.hpp"
#include "fewbit/trainer.hpp"

namespace fewbit {

/// One specialist net: it distinguishes only the classes in `subset`
/// (sorted ascending; the smallest class takes the all-plus pattern).
struct EnsembleMember {
  std::vector<int> subset;
  Architecture arch;
  WeightAssignment weights;
  std::string stage_reached;
  std::optional<double> mm_gap;
  double wall_time_s = 0.0;

  ClassEncoding encoding() const { return ClassEncoding::make(subset); }
};

/// One trained net per size-m subset of the class set, in lexicographic
/// subset order, plus the voting apparatus.
struct Ensemble {
  std::vector<int> classes;  // sorted ascending
  int subset_size = 2;       // m
  std::vector<EnsembleMember> members;

  int member_index(std::span<const int> subset) const;  // -1 when absent
};

/// All size-m subsets of `classes` (assumed sorted), lexicographic.
std::vector<std::vector<int>> enumerate_subsets(const std::vector<int>& classes, int m);

struct VoteTally {
  std::vector<std::optional<int>> member_votes;      // per member, nullopt = abstained
  std::map<int, std::vector<int>> votes_by_class;    // C_b: class -> member indices
  std::vector<int> dominant;                         // D, sorted ascending

  int votes_for(int cls) const {
    auto it = votes_by_class.find(cls);
    return it == votes_by_class.end() ? 0 : static_cast<int>(it->second.size());
  }
};

/// Aggregates already-computed member votes (abstentions excluded from
/// every tally set).
VoteTally tally_votes(const Ensemble& ensemble,
                      std::vector<std::optional<int>> member_votes);

/// Runs every member on x and aggregates.
VoteTally tally(std::span<const double> x, const Ensemble& ensemble);

/// Unique dominant label -> that label; exactly m dominants -> the vote of
/// the net trained on that subset; anything else -> unclassified.
std::optional<int> resolve(const VoteTally& tally, const Ensemble& ensemble);

enum class LabelStatus { OneC, OneI, MC, MIp, MIpp, OIp, OIpp };

/// Rendered with the numeral for m = 2 (2C, 2I', 2I''), literal m otherwise.
std::string to_string(LabelStatus status, int subset_size);
const std::vector<LabelStatus>& all_label_statuses();

LabelStatus classify_status(const VoteTally& tally, const Ensemble& ensemble, int truth);

/// Versioned, self-describing JSON document with exact integer weights and
/// per-member training metadata; byte-stable for reproducible digests.
std::string serialize_ensemble(const Ensemble& ensemble);
Ensemble deserialize_ensemble(const std::string& text);

struct EnsembleBuildOutcome {
  Ensemble ensemble;                              // only the members that trained
  std::vector<TrainedNet> trained;                // aligned with ensemble.members
  std::vector<std::vector<int>> failed_subsets;   // with error text below
  std::vector<std::string> failures;
};

/// Trains one member per subset, each only on the samples of its m classes.
/// Members are independent jobs run on `parallelism` threads.
EnsembleBuildOutcome build_ensemble_detailed(
    const std::vector<int>& classes, int subset_size,
    const std::map<int, std::vector<std::vector<double>>>& features_per_class,
    const Architecture& arch, const Tolerances& tol, const StageBudget& budget,
    StagePlan plan, const TrainerOptions& options, int parallelism);

/// As above but any member failure aborts the build.
Ensemble build_ensemble(const std::vector<int>& classes, int subset_size,
                        const std::map<int, std::vector<std::vector<double>>>& features_per_class,
                        const Architecture& arch, const Tolerances& tol,
                        const StageBudget& budget, StagePlan plan,
                        const TrainerOptions& options, int parallelism);

}  // namespace fewbit
