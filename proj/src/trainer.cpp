#include "fewbit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fewbit/inference.hpp"

namespace fewbit {

namespace {

constexpr double kAuditTol = 1e-6;

StageSummary summarize(const SolveResult& res) {
  return {res.status, res.objective, res.mip_gap, res.wall_time_s, res.used_warm_fallback};
}

double min_margin(const std::vector<std::vector<double>>& margins) {
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& layer : margins) {
    for (double m : layer) lowest = std::min(lowest, m);
  }
  return lowest;
}

// Pointwise check that the implied margins of `weights` clear `required`.
bool margins_cleared(const Architecture& arch, const WeightAssignment& weights,
                     std::span<const LabeledSample> data,
                     const std::vector<std::vector<double>>& required) {
  const auto implied = implied_margins(arch, weights, data);
  for (std::size_t l = 0; l < required.size(); ++l) {
    for (std::size_t j = 0; j < required[l].size(); ++j) {
      if (implied[l][j] < required[l][j] - kAuditTol) return false;
    }
  }
  return true;
}

std::vector<std::vector<double>> uniform_margins(const Architecture& arch, double value) {
  std::vector<std::vector<double>> margins(arch.depth());
  for (int l = 1; l <= arch.depth(); ++l) {
    margins[l - 1].assign(arch.layer_sizes[l], value);
  }
  return margins;
}

}  // namespace

std::string to_string(StagePlan plan) {
  switch (plan) {
    case StagePlan::SM: return "sm";
    case StagePlan::SM_MM: return "sm+mm";
    case StagePlan::SM_MW: return "sm+mw";
    case StagePlan::SM_MM_MW: return "sm+mm+mw";
  }
  return "sm";
}

StagePlan parse_stage_plan(const std::string& text) {
  if (text == "sm") return StagePlan::SM;
  if (text == "sm+mm") return StagePlan::SM_MM;
  if (text == "sm+mw") return StagePlan::SM_MW;
  if (text == "sm+mm+mw") return StagePlan::SM_MM_MW;
  throw std::invalid_argument("unknown stage plan '" + text + "'");
}

std::vector<int> compute_t_hat(const MilpModel& sm_model, std::span<const double> values,
                               int sample_count, int output_width) {
  std::vector<int> t_hat;
  for (int k = 0; k < sample_count; ++k) {
    bool all_correct = true;
    for (int j = 0; j < output_width; ++j) {
      const int var = sm_model.find_variable(q_name(k, j));
      if (var < 0) throw std::invalid_argument("SM model lacks a correctness bit");
      if (std::round(values[var]) != 1.0) {
        all_correct = false;
        break;
      }
    }
    if (all_correct) t_hat.push_back(k);
  }
  return t_hat;
}

WeightAssignment extract_weights(const MilpModel& model, std::span<const double> values,
                                 const Architecture& arch) {
  WeightAssignment weights(arch);
  for (int l = 1; l <= arch.depth(); ++l) {
    for (int i = 0; i < arch.layer_sizes[l - 1]; ++i) {
      for (int j = 0; j < arch.layer_sizes[l]; ++j) {
        const int var = model.find_variable(w_name(l, i, j));
        if (var < 0) throw std::invalid_argument("model lacks weight " + w_name(l, i, j));
        weights.set(l, i, j, static_cast<int>(std::llround(values[var])));
      }
    }
  }
  return weights;
}

std::vector<std::vector<double>> extract_margins(const MilpModel& model,
                                                 std::span<const double> values,
                                                 const Architecture& arch) {
  std::vector<std::vector<double>> margins(arch.depth());
  for (int l = 1; l <= arch.depth(); ++l) {
    margins[l - 1].resize(arch.layer_sizes[l]);
    for (int j = 0; j < arch.layer_sizes[l]; ++j) {
      const int var = model.find_variable(m_name(l, j));
      if (var < 0) throw std::invalid_argument("model lacks margin " + m_name(l, j));
      margins[l - 1][j] = values[var];
    }
  }
  return margins;
}

WeightAssignment greedy_prune(const Architecture& arch, WeightAssignment weights,
                              std::span<const LabeledSample> data,
                              const std::vector<std::vector<double>>& required_margins) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int l = 1; l <= arch.depth(); ++l) {
      for (int i = 0; i < arch.layer_sizes[l - 1]; ++i) {
        for (int j = 0; j < arch.layer_sizes[l]; ++j) {
          const int saved = weights.at(l, i, j);
          if (saved == 0) continue;
          weights.set(l, i, j, 0);
          if (margins_cleared(arch, weights, data, required_margins)) {
            changed = true;
          } else {
            weights.set(l, i, j, saved);
          }
        }
      }
    }
  }
  return weights;
}

TrainedNet train(const Architecture& arch, std::span<const LabeledSample> data,
                 const Tolerances& tol, const StageBudget& budget, StagePlan plan,
                 const TrainerOptions& options) {
  if (data.empty()) throw std::invalid_argument("training needs a nonempty sample list");
  if (!(budget.sm_s > 0 && budget.mm_s > 0 && budget.mw_s > 0)) {
    throw std::invalid_argument("stage budgets must be positive");
  }

  TrainedNet net;
  net.arch = arch;
  net.training_size = data.size();
  net.stage_reached = "SM";

  // --- Stage SM -------------------------------------------------------
  const MilpModel sm_model = build_sm(arch, data, tol);
  SolveResult sm_res = solve({&sm_model, budget.sm_s, options.backend});
  if (!sm_res.has_incumbent()) {
    throw TrainingError("SM stage produced no incumbent (" + to_string(sm_res.status) +
                        (sm_res.message.empty() ? "" : ": " + sm_res.message) + ")");
  }
  net.sm = summarize(sm_res);
  net.weights_after_sm = extract_weights(sm_model, sm_res.values, arch);
  net.weights = net.weights_after_sm;
  net.t_hat = compute_t_hat(sm_model, sm_res.values, static_cast<int>(data.size()),
                            arch.outputs());

  double sm_left = std::max(0.0, budget.sm_s - sm_res.wall_time_s);

  if (plan == StagePlan::SM || net.t_hat.empty()) {
    net.margins_verified = true;
    net.pruning_monotone = true;
    return net;
  }

  std::vector<LabeledSample> that_data;
  that_data.reserve(net.t_hat.size());
  for (int k : net.t_hat) that_data.push_back(data[k]);

  // The SM hand-off is admissible for the margin stages iff every neuron
  // already clears epsilon on T-hat. SM itself only forces active-side sums
  // >= 0, so an incumbent can sit exactly on 0 (and the margin stages can
  // even be infeasible for the T-hat it induces). When that happens, re-solve
  // with the objective value locked and the active side tightened to epsilon
  // for fully-correct samples: any incumbent of that model is an equally
  // good SM solution whose T-hat is margin-compatible by construction.
  auto admissible = [&](const WeightAssignment& w,
                        std::span<const LabeledSample> subset) {
    return min_margin(implied_margins(arch, w, subset)) >= tol.epsilon - kAuditTol;
  };
  net.warm_mm_admissible = admissible(net.weights_after_sm, that_data);
  if (!net.warm_mm_admissible && options.polish_margins && sm_left > 1.0) {
    const MilpModel polish_model =
        build_sm_polish(arch, data, tol, std::llround(sm_res.objective));
    const SolveResult polish_res = solve({&polish_model, sm_left, options.backend});
    sm_left = std::max(0.0, sm_left - polish_res.wall_time_s);
    if (polish_res.has_incumbent()) {
      const WeightAssignment polished = extract_weights(polish_model, polish_res.values, arch);
      const std::vector<int> polished_t_hat = compute_t_hat(
          polish_model, polish_res.values, static_cast<int>(data.size()), arch.outputs());
      std::vector<LabeledSample> polished_that;
      polished_that.reserve(polished_t_hat.size());
      for (int k : polished_t_hat) polished_that.push_back(data[k]);
      if (!polished_t_hat.empty() && admissible(polished, polished_that)) {
        net.weights_after_sm = polished;
        net.weights = polished;
        net.t_hat = polished_t_hat;
        that_data = std::move(polished_that);
        net.sm_polished = true;
        net.warm_mm_admissible = true;
      }
    }
  }

  const bool sm_was_optimal = net.sm->status == SolveStatus::Optimal;
  const double rollover_sm = (budget.rollover && sm_was_optimal) ? sm_left : 0.0;

  WeightAssignment pre_mw_weights = net.weights_after_sm;
  double mw_extra = 0.0;

  // --- Stage MM -------------------------------------------------------
  if (plan == StagePlan::SM_MM || plan == StagePlan::SM_MM_MW) {
    const MilpModel mm_model =
        build_mm(arch, that_data, tol, net.warm_mm_admissible ? &net.weights_after_sm : nullptr);
    const SolveResult mm_res = solve({&mm_model, budget.mm_s + rollover_sm, options.backend});
    if (mm_res.has_incumbent()) {
      net.mm = summarize(mm_res);
      const WeightAssignment mm_weights = extract_weights(mm_model, mm_res.values, arch);
      net.weights_after_mm = mm_weights;
      net.weights = mm_weights;
      // Margin values carry solver float noise; a hair above the true slack
      // (say 4 + 1e-6 on integer data) would make the link-minimization
      // stage infeasible outright. Snap each margin to the exact slack the
      // MM weights achieve.
      net.fixed_margins = extract_margins(mm_model, mm_res.values, arch);
      const auto exact = implied_margins(arch, mm_weights, that_data);
      for (std::size_t l = 0; l < net.fixed_margins.size(); ++l) {
        for (std::size_t j = 0; j < net.fixed_margins[l].size(); ++j) {
          net.fixed_margins[l][j] =
              std::max(tol.epsilon, std::min(net.fixed_margins[l][j], exact[l][j]));
        }
      }
      net.stage_reached = "SM+MM";
      pre_mw_weights = mm_weights;
      if (budget.rollover && mm_res.status == SolveStatus::Optimal) {
        mw_extra = std::max(0.0, budget.mm_s + rollover_sm - mm_res.wall_time_s);
      }
    } else {
      // No robust incumbent to fix margins from; report and stop after SM.
      net.mm = summarize(mm_res);
      net.margins_verified = true;
      net.pruning_monotone = true;
      return net;
    }
  } else if (plan == StagePlan::SM_MW) {
    // Margins were never optimized; fix them at the weakest admissible value.
    net.fixed_margins = uniform_margins(arch, tol.epsilon);
    mw_extra = rollover_sm;
  }

  // --- Stage MW -------------------------------------------------------
  if (plan == StagePlan::SM_MW || plan == StagePlan::SM_MM_MW) {
    net.warm_mw_admissible = margins_cleared(arch, pre_mw_weights, that_data, net.fixed_margins);
    WeightAssignment mw_warm = pre_mw_weights;
    if (net.warm_mw_admissible) {
      mw_warm = greedy_prune(arch, pre_mw_weights, that_data, net.fixed_margins);
    }
    const MilpModel mw_model = build_mw(arch, that_data, net.fixed_margins, tol,
                                        net.warm_mw_admissible ? &mw_warm : nullptr);
    const SolveResult mw_res = solve({&mw_model, budget.mw_s + mw_extra, options.backend});
    if (mw_res.has_incumbent()) {
      net.mw = summarize(mw_res);
      net.weights = extract_weights(mw_model, mw_res.values, arch);
      net.stage_reached = plan == StagePlan::SM_MW ? "SM+MW" : "SM+MM+MW";
    } else {
      net.mw = summarize(mw_res);
      net.weights = pre_mw_weights;
    }
  }

  net.margins_verified = net.fixed_margins.empty() ||
                         margins_cleared(arch, net.weights, that_data, net.fixed_margins);
  net.pruning_monotone = net.weights.nonzero_count() <= pre_mw_weights.nonzero_count();
  return net;
}

BruteForceResult brute_force_train(
    const Architecture& arch, std::span<const LabeledSample> data, const Tolerances& tol,
    BruteForceObjective objective,
    const std::vector<std::vector<double>>* fixed_margins) {
  if (data.empty()) throw std::invalid_argument("oracle needs a nonempty sample list");
  if (objective == BruteForceObjective::MwNonzeros && fixed_margins == nullptr) {
    throw std::invalid_argument("the nonzero-count objective needs fixed margins");
  }
  const long long links = arch.total_links();
  const double domain = 2.0 * arch.weight_bound + 1.0;
  if (links * std::log(domain) > std::log(1e7)) {
    throw std::invalid_argument("oracle refused: more than 1e7 weight assignments");
  }

  const double scale = prediction_scale(arch);
  const double confident_threshold = 0.5 / scale;  // y * output sum must reach this

  BruteForceResult best;
  best.objective = objective == BruteForceObjective::MwNonzeros
                       ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();

  // Odometer over all assignments in link order.
  std::vector<int> flat(static_cast<std::size_t>(links), -arch.weight_bound);
  WeightAssignment weights(arch);
  auto apply_flat = [&]() {
    std::size_t pos = 0;
    for (int l = 1; l <= arch.depth(); ++l) {
      for (int i = 0; i < arch.layer_sizes[l - 1]; ++i) {
        for (int j = 0; j < arch.layer_sizes[l]; ++j) weights.set(l, i, j, flat[pos++]);
      }
    }
  };

  while (true) {
    apply_flat();
    double value = 0.0;
    bool feasible = true;
    switch (objective) {
      case BruteForceObjective::SmCount: {
        int confident_bits = 0;
        for (const auto& sample : data) {
          const ActivationTrace trace = forward(arch, weights, sample.features);
          for (int j = 0; j < arch.outputs(); ++j) {
            const double agree = sample.target_bits[j] * trace.pre[arch.depth() - 1][j];
            if (agree >= confident_threshold) ++confident_bits;
          }
        }
        value = confident_bits;
        break;
      }
      case BruteForceObjective::MmMarginSum: {
        const auto implied = implied_margins(arch, weights, data);
        if (min_margin(implied) < tol.epsilon) {
          feasible = false;
        } else {
          for (const auto& layer : implied) {
            for (double m : layer) value += m;
          }
        }
        break;
      }
      case BruteForceObjective::MwNonzeros: {
        if (!margins_cleared(arch, weights, data, *fixed_margins)) {
          feasible = false;
        } else {
          value = static_cast<double>(weights.nonzero_count());
        }
        break;
      }
    }
    if (feasible) {
      const bool improves = objective == BruteForceObjective::MwNonzeros
                                ? value < best.objective
                                : value > best.objective;
      if (improves || !best.feasible) {
        best.feasible = true;
        best.objective = value;
        best.weights = weights;
      }
    }
    // advance odometer
    std::size_t pos = 0;
    while (pos < flat.size()) {
      if (flat[pos] < arch.weight_bound) {
        ++flat[pos];
        break;
      }
      flat[pos] = -arch.weight_bound;
      ++pos;
    }
    if (pos == flat.size()) break;
  }
  return best;
}

}  // namespace fewbit
