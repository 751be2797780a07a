#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fewbit/milp.hpp"
#include "fewbit/model.hpp"

namespace fewbit {

/// Layer-by-layer record of one forward pass: the ±1 activations z_l for
/// l >= 1 and the pre-activation sums feeding each neuron. The activation is
/// +1 exactly when the pre-activation is >= 0.
struct ActivationTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;         // pre[l-1][j]
  std::vector<std::vector<int>> activations;    // activations[l-1][j], each ±1

  std::span<const int> output_bits() const { return activations.back(); }
};

ActivationTrace forward(const Architecture& arch, const WeightAssignment& weights,
                        std::span<const double> x);

std::optional<int> decode(std::span<const int> bits, const ClassEncoding& enc);

/// Smallest slack per neuron over a sample set: for hidden neurons the
/// distance of the pre-activation from 0 on its active side, for output
/// neurons the signed agreement sum y_j * pre_j. margins[l-1][j].
std::vector<std::vector<double>> implied_margins(const Architecture& arch,
                                                 const WeightAssignment& weights,
                                                 std::span<const LabeledSample> samples);

/// True iff the indicator and product values recomputed from the trace match
/// the incumbent's rounded values at every index of sample k. Throws when
/// the model lacks an index the trace requires.
bool verify_against_milp(const ActivationTrace& trace, const MilpModel& model,
                         std::span<const double> incumbent, int sample_index);

/// Output bits via 64-wide bit-packed hidden layers. Only defined for P = 1
/// nets; produces exactly the same bits as forward().
std::vector<int> forward_bits(const Architecture& arch, const WeightAssignment& weights,
                              std::span<const double> x);

}  // namespace fewbit
