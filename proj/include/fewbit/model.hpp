#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fewbit {

/// Dense feed-forward architecture with integer weights bounded by P.
/// layer_sizes = [n_0, ..., n_L]; n_0 is the input width, n_L the output
/// width. P = 1 is the binarized case.
struct Architecture {
  std::vector<int> layer_sizes;
  int weight_bound = 1;  // P

  Architecture() = default;
  Architecture(std::vector<int> sizes, int p);

  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }  // L
  int inputs() const { return layer_sizes.front(); }
  int outputs() const { return layer_sizes.back(); }
  long long total_links() const;

  bool operator==(const Architecture&) const = default;
};

/// Integer weights for every link, indexed (layer l in 1..L, source i,
/// target j). Stored per layer as a row-major (n_{l-1} x n_l) matrix.
class WeightAssignment {
 public:
  WeightAssignment() = default;
  explicit WeightAssignment(const Architecture& arch);  // all zero

  int at(int layer, int from, int to) const;
  void set(int layer, int from, int to, int value);

  long long nonzero_count() const;
  const Architecture& arch() const { return arch_; }
  std::span<const int> layer_values(int layer) const;

  bool operator==(const WeightAssignment&) const = default;

 private:
  Architecture arch_;
  std::vector<std::vector<int>> layers_;  // layers_[l-1], size n_{l-1}*n_l

  std::size_t offset(int layer, int from, int to) const;
};

/// One training point: raw features plus the target output bits (each ±1).
struct LabeledSample {
  std::vector<double> features;
  std::vector<int> target_bits;
};

/// Largest absolute feature value over a training set.
struct DataBound {
  double value = 0.0;
};

DataBound compute_data_bound(std::span<const LabeledSample> samples);

/// Maps classes to output bit patterns. Patterns are vectors over {-1,+1}
/// of width ceil(log2 |classes|) (1 for two classes). The first class gets
/// the all-plus pattern, then patterns in descending lexicographic order
/// (+1 before -1). Patterns beyond the class count decode to "unclassified".
class ClassEncoding {
 public:
  static ClassEncoding make(const std::vector<int>& classes);

  int bit_width() const { return bit_width_; }
  const std::vector<int>& classes() const { return classes_; }

  std::vector<int> encode(int class_id) const;
  std::optional<int> decode(std::span<const int> bits) const;

 private:
  std::vector<int> classes_;
  int bit_width_ = 0;
};

inline ClassEncoding make_encoding(const std::vector<int>& classes) {
  return ClassEncoding::make(classes);
}

}  // namespace fewbit
