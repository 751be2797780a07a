#include "fewbit/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fewbit {

Architecture::Architecture(std::vector<int> sizes, int p)
    : layer_sizes(std::move(sizes)), weight_bound(p) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("architecture needs at least two layers");
  }
  for (int n : layer_sizes) {
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  if (weight_bound < 1) {
    throw std::invalid_argument("weight bound P must be >= 1");
  }
}

long long Architecture::total_links() const {
  long long total = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    total += static_cast<long long>(layer_sizes[l - 1]) * layer_sizes[l];
  }
  return total;
}

WeightAssignment::WeightAssignment(const Architecture& arch) : arch_(arch) {
  layers_.resize(arch.depth());
  for (int l = 1; l <= arch.depth(); ++l) {
    layers_[l - 1].assign(
        static_cast<std::size_t>(arch.layer_sizes[l - 1]) * arch.layer_sizes[l], 0);
  }
}

std::size_t WeightAssignment::offset(int layer, int from, int to) const {
  if (layer < 1 || layer > arch_.depth()) {
    throw std::invalid_argument("weight layer index out of range");
  }
  const int n_from = arch_.layer_sizes[layer - 1];
  const int n_to = arch_.layer_sizes[layer];
  if (from < 0 || from >= n_from || to < 0 || to >= n_to) {
    throw std::invalid_argument("weight neuron index out of range");
  }
  return static_cast<std::size_t>(from) * n_to + to;
}

int WeightAssignment::at(int layer, int from, int to) const {
  return layers_[layer - 1][offset(layer, from, to)];
}

void WeightAssignment::set(int layer, int from, int to, int value) {
  if (value < -arch_.weight_bound || value > arch_.weight_bound) {
    throw std::invalid_argument("weight value outside [-P, P]");
  }
  layers_[layer - 1][offset(layer, from, to)] = value;
}

long long WeightAssignment::nonzero_count() const {
  long long count = 0;
  for (const auto& layer : layers_) {
    count += std::count_if(layer.begin(), layer.end(), [](int w) { return w != 0; });
  }
  return count;
}

std::span<const int> WeightAssignment::layer_values(int layer) const {
  if (layer < 1 || layer > arch_.depth()) {
    throw std::invalid_argument("weight layer index out of range");
  }
  return layers_[layer - 1];
}

DataBound compute_data_bound(std::span<const LabeledSample> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("data bound over an empty sample list");
  }
  double bound = 0.0;
  for (const auto& s : samples) {
    for (double x : s.features) bound = std::max(bound, std::abs(x));
  }
  return DataBound{bound};
}

ClassEncoding ClassEncoding::make(const std::vector<int>& classes) {
  if (classes.size() < 2) {
    throw std::invalid_argument("an encoding needs at least two classes");
  }
  ClassEncoding enc;
  enc.classes_ = classes;
  int width = 1;
  while ((1u << width) < classes.size()) ++width;
  enc.bit_width_ = width;
  return enc;
}

std::vector<int> ClassEncoding::encode(int class_id) const {
  const auto it = std::find(classes_.begin(), classes_.end(), class_id);
  if (it == classes_.end()) {
    throw std::invalid_argument("class id not covered by this encoding");
  }
  // Class k takes the k-th pattern in descending lexicographic order,
  // reading +1 as the high bit value.
  const unsigned rank = static_cast<unsigned>(it - classes_.begin());
  const unsigned code = (1u << bit_width_) - 1u - rank;
  std::vector<int> bits(bit_width_);
  for (int b = 0; b < bit_width_; ++b) {
    bits[b] = (code >> (bit_width_ - 1 - b)) & 1u ? +1 : -1;
  }
  return bits;
}

std::optional<int> ClassEncoding::decode(std::span<const int> bits) const {
  if (static_cast<int>(bits.size()) != bit_width_) {
    throw std::invalid_argument("bit pattern width does not match encoding");
  }
  unsigned code = 0;
  for (int b = 0; b < bit_width_; ++b) {
    code = (code << 1) | (bits[b] > 0 ? 1u : 0u);
  }
  const unsigned rank = (1u << bit_width_) - 1u - code;
  if (rank >= classes_.size()) return std::nullopt;
  return classes_[rank];
}

}  // namespace fewbit
