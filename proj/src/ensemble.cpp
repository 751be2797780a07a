#include "fewbit/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "fewbit/inference.hpp"

namespace fewbit {

namespace {

using ordered_json = nlohmann::ordered_json;

void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}

}  // namespace

int Ensemble::member_index(std::span<const int> subset) const {
  for (std::size_t idx = 0; idx < members.size(); ++idx) {
    if (std::ranges::equal(members[idx].subset, subset)) return static_cast<int>(idx);
  }
  return -1;
}

std::vector<std::vector<int>> enumerate_subsets(const std::vector<int>& classes, int m) {
  require(m >= 1 && m <= static_cast<int>(classes.size()), "subset size out of range");
  std::vector<std::vector<int>> subsets;
  std::vector<int> picks(m);
  // odometer over combination indices
  for (int i = 0; i < m; ++i) picks[i] = i;
  const int n = static_cast<int>(classes.size());
  while (true) {
    std::vector<int> subset(m);
    for (int i = 0; i < m; ++i) subset[i] = classes[picks[i]];
    subsets.push_back(std::move(subset));
    int pos = m - 1;
    while (pos >= 0 && picks[pos] == n - m + pos) --pos;
    if (pos < 0) break;
    ++picks[pos];
    for (int i = pos + 1; i < m; ++i) picks[i] = picks[i - 1] + 1;
  }
  return subsets;
}

VoteTally tally_votes(const Ensemble& ensemble, std::vector<std::optional<int>> member_votes) {
  require(member_votes.size() == ensemble.members.size(),
          "one vote slot per ensemble member required");
  VoteTally result;
  result.member_votes = std::move(member_votes);
  for (std::size_t idx = 0; idx < result.member_votes.size(); ++idx) {
    if (result.member_votes[idx]) {
      result.votes_by_class[*result.member_votes[idx]].push_back(static_cast<int>(idx));
    }
  }
  int best = 0;
  for (int cls : ensemble.classes) best = std::max(best, result.votes_for(cls));
  for (int cls : ensemble.classes) {
    if (result.votes_for(cls) == best) result.dominant.push_back(cls);
  }
  return result;
}

VoteTally tally(std::span<const double> x, const Ensemble& ensemble) {
  std::vector<std::optional<int>> votes;
  votes.reserve(ensemble.members.size());
  for (const auto& member : ensemble.members) {
    const ActivationTrace trace = forward(member.arch, member.weights, x);
    votes.push_back(decode(trace.output_bits(), member.encoding()));
  }
  return tally_votes(ensemble, std::move(votes));
}

std::optional<int> resolve(const VoteTally& tally, const Ensemble& ensemble) {
  if (tally.dominant.size() == 1) return tally.dominant.front();
  if (static_cast<int>(tally.dominant.size()) == ensemble.subset_size) {
    const int idx = ensemble.member_index(tally.dominant);
    if (idx >= 0) return tally.member_votes[idx];
  }
  return std::nullopt;
}

std::string to_string(LabelStatus status, int subset_size) {
  const std::string m = subset_size == 2 ? "2" : "m";
  switch (status) {
    case LabelStatus::OneC: return "1C";
    case LabelStatus::OneI: return "1I";
    case LabelStatus::MC: return m + "C";
    case LabelStatus::MIp: return m + "I'";
    case LabelStatus::MIpp: return m + "I''";
    case LabelStatus::OIp: return "oI'";
    case LabelStatus::OIpp: return "oI''";
  }
  return "?";
}

const std::vector<LabelStatus>& all_label_statuses() {
  static const std::vector<LabelStatus> statuses = {
      LabelStatus::OneC, LabelStatus::OneI, LabelStatus::MC,  LabelStatus::MIp,
      LabelStatus::MIpp, LabelStatus::OIp,  LabelStatus::OIpp};
  return statuses;
}

LabelStatus classify_status(const VoteTally& tally, const Ensemble& ensemble, int truth) {
  require(std::ranges::find(ensemble.classes, truth) != ensemble.classes.end(),
          "truth label outside the ensemble's class set");
  const bool truth_dominant =
      std::ranges::find(tally.dominant, truth) != tally.dominant.end();
  if (tally.dominant.size() == 1) {
    return tally.dominant.front() == truth ? LabelStatus::OneC : LabelStatus::OneI;
  }
  if (static_cast<int>(tally.dominant.size()) == ensemble.subset_size) {
    const int idx = ensemble.member_index(tally.dominant);
    const std::optional<int> vote = idx >= 0 ? tally.member_votes[idx] : std::nullopt;
    if (vote && *vote == truth) return LabelStatus::MC;
    return truth_dominant ? LabelStatus::MIp : LabelStatus::MIpp;
  }
  return truth_dominant ? LabelStatus::OIp : LabelStatus::OIpp;
}

std::string serialize_ensemble(const Ensemble& ensemble) {
  ordered_json doc;
  doc["format"] = "fewbit-ensemble";
  doc["version"] = 1;
  doc["classes"] = ensemble.classes;
  doc["subset_size"] = ensemble.subset_size;
  doc["members"] = ordered_json::array();
  for (const auto& member : ensemble.members) {
    ordered_json m;
    m["subset"] = member.subset;
    m["layer_sizes"] = member.arch.layer_sizes;
    m["weight_bound"] = member.arch.weight_bound;
    ordered_json layers = ordered_json::array();
    for (int l = 1; l <= member.arch.depth(); ++l) {
      const auto values = member.weights.layer_values(l);
      layers.push_back(std::vector<int>(values.begin(), values.end()));
    }
    m["weights"] = std::move(layers);
    m["stage_reached"] = member.stage_reached;
    if (member.mm_gap) m["mm_gap"] = *member.mm_gap;
    else m["mm_gap"] = nullptr;
    m["wall_time_s"] = member.wall_time_s;
    doc["members"].push_back(std::move(m));
  }
  return doc.dump(2) + "\n";
}

Ensemble deserialize_ensemble(const std::string& text) {
  const ordered_json doc = ordered_json::parse(text);
  if (doc.value("format", "") != "fewbit-ensemble") {
    throw std::invalid_argument("not an ensemble document");
  }
  if (doc.value("version", 0) != 1) {
    throw std::invalid_argument("unsupported ensemble document version");
  }
  Ensemble ensemble;
  ensemble.classes = doc.at("classes").get<std::vector<int>>();
  ensemble.subset_size = doc.at("subset_size").get<int>();
  for (const auto& m : doc.at("members")) {
    EnsembleMember member;
    member.subset = m.at("subset").get<std::vector<int>>();
    member.arch = Architecture(m.at("layer_sizes").get<std::vector<int>>(),
                               m.at("weight_bound").get<int>());
    member.weights = WeightAssignment(member.arch);
    const auto& layers = m.at("weights");
    for (int l = 1; l <= member.arch.depth(); ++l) {
      const auto flat = layers.at(l - 1).get<std::vector<int>>();
      const int n_to = member.arch.layer_sizes[l];
      for (std::size_t pos = 0; pos < flat.size(); ++pos) {
        member.weights.set(l, static_cast<int>(pos) / n_to, static_cast<int>(pos) % n_to,
                           flat[pos]);
      }
    }
    member.stage_reached = m.value("stage_reached", "");
    if (m.contains("mm_gap") && !m.at("mm_gap").is_null()) {
      member.mm_gap = m.at("mm_gap").get<double>();
    }
    member.wall_time_s = m.value("wall_time_s", 0.0);
    ensemble.members.push_back(std::move(member));
  }
  return ensemble;
}

EnsembleBuildOutcome build_ensemble_detailed(
    const std::vector<int>& classes, int subset_size,
    const std::map<int, std::vector<std::vector<double>>>& features_per_class,
    const Architecture& arch, const Tolerances& tol, const StageBudget& budget,
    StagePlan plan, const TrainerOptions& options, int parallelism) {
  require(subset_size >= 2, "subset size must be at least 2");
  require(static_cast<int>(classes.size()) >= subset_size,
          "need at least as many classes as the subset size");
  std::vector<int> sorted_classes = classes;
  std::ranges::sort(sorted_classes);
  require(std::ranges::adjacent_find(sorted_classes) == sorted_classes.end(),
          "duplicate class ids");
  for (int cls : sorted_classes) {
    const auto it = features_per_class.find(cls);
    require(it != features_per_class.end() && !it->second.empty(),
            "every class needs a nonempty sample list");
  }

  const auto subsets = enumerate_subsets(sorted_classes, subset_size);
  struct Slot {
    bool ok = false;
    EnsembleMember member;
    TrainedNet net;
    std::string error;
  };
  std::vector<Slot> slots(subsets.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t idx = next.fetch_add(1); idx < subsets.size(); idx = next.fetch_add(1)) {
      const auto& subset = subsets[idx];
      try {
        const ClassEncoding enc = ClassEncoding::make(subset);
        std::vector<LabeledSample> samples;
        for (int cls : subset) {
          const auto bits = enc.encode(cls);
          for (const auto& features : features_per_class.at(cls)) {
            samples.push_back({features, bits});
          }
        }
        TrainedNet net = train(arch, samples, tol, budget, plan, options);
        EnsembleMember member;
        member.subset = subset;
        member.arch = arch;
        member.weights = net.weights;
        member.stage_reached = net.stage_reached;
        if (net.mm) member.mm_gap = net.mm->mip_gap;
        member.wall_time_s = (net.sm ? net.sm->wall_time_s : 0.0) +
                             (net.mm ? net.mm->wall_time_s : 0.0) +
                             (net.mw ? net.mw->wall_time_s : 0.0);
        slots[idx].member = std::move(member);
        slots[idx].net = std::move(net);
        slots[idx].ok = true;
      } catch (const std::exception& err) {
        slots[idx].error = err.what();
      }
    }
  };

  const int threads = std::max(1, parallelism);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EnsembleBuildOutcome outcome;
  outcome.ensemble.classes = sorted_classes;
  outcome.ensemble.subset_size = subset_size;
  for (std::size_t idx = 0; idx < subsets.size(); ++idx) {
    if (slots[idx].ok) {
      outcome.ensemble.members.push_back(std::move(slots[idx].member));
      outcome.trained.push_back(std::move(slots[idx].net));
    } else {
      outcome.failed_subsets.push_back(subsets[idx]);
      outcome.failures.push_back(slots[idx].error);
    }
  }
  return outcome;
}

Ensemble build_ensemble(const std::vector<int>& classes, int subset_size,
                        const std::map<int, std::vector<std::vector<double>>>& features_per_class,
                        const Architecture& arch, const Tolerances& tol,
                        const StageBudget& budget, StagePlan plan,
                        const TrainerOptions& options, int parallelism) {
  auto outcome = build_ensemble_detailed(classes, subset_size, features_per_class, arch, tol,
                                         budget, plan, options, parallelism);
  if (!outcome.failed_subsets.empty()) {
    std::string message = "ensemble build failed for subsets:";
    for (std::size_t i = 0; i < outcome.failed_subsets.size(); ++i) {
      message += " {";
      for (std::size_t j = 0; j < outcome.failed_subsets[i].size(); ++j) {
        if (j) message += ",";
        message += std::to_string(outcome.failed_subsets[i][j]);
      }
      message += "}";
    }
    throw TrainingError(message);
  }
  return std::move(outcome.ensemble);
}

}  // namespace fewbit
