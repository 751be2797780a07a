#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fewbit/model.hpp"
#include "fewbit/solver.hpp"  // FormatError

namespace fewbit {

/// Raw classification data before any target-bit encoding is applied.
struct RawSample {
  std::vector<double> features;
  int label = 0;
};

struct Dataset {
  std::vector<RawSample> samples;
  std::vector<int> classes;  // sorted distinct labels
  bool integer_valued = true;

  std::vector<std::size_t> indices_of(int label) const;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// IDX image/label pair (big-endian magic 0x803 / 0x801). Every byte is
/// accounted for; surplus or missing payload is a format error naming the
/// offset.
Dataset load_idx(std::span<const unsigned char> images, std::span<const unsigned char> labels);
Dataset load_idx_files(const std::filesystem::path& images, const std::filesystem::path& labels);

struct TrainTestSplit {
  std::vector<RawSample> train;
  std::vector<RawSample> test;
  int dropped_rows = 0;  // rows with missing or malformed numeric cells
};

/// 13 numeric features + label per row; an optional header row is detected
/// by a non-numeric first cell. Labels are binarized (0 vs nonzero). The
/// seeded split is deterministic.
TrainTestSplit load_csv_heart(const std::string& text, double test_fraction, std::uint64_t seed);
TrainTestSplit load_csv_heart_file(const std::filesystem::path& path, double test_fraction,
                                   std::uint64_t seed);

/// Draws `per_class` unseen samples per class, uniformly without replacement
/// under the seeded generator; drawn indices are appended to `exclusion`.
std::map<int, std::vector<std::size_t>> sample_per_class(const Dataset& dataset,
                                                         const std::vector<int>& classes,
                                                         int per_class, std::uint64_t seed,
                                                         std::set<std::size_t>& exclusion);

/// First `per_class` unseen samples per class in dataset order; disjoint
/// from every index in `exclusion`.
std::vector<std::size_t> build_test_set(const Dataset& dataset, const std::vector<int>& classes,
                                        int per_class, const std::set<std::size_t>& exclusion);

/// Block mean pooling with round-half-up. Sizes that the factor does not
/// divide are padded symmetrically by edge replication, so constant images
/// stay constant.
std::vector<double> downsample(std::span<const double> image, int width, int height, int factor);

/// Applies downsample() to every sample of a square-image dataset.
Dataset downsample_dataset(const Dataset& dataset, int side, int factor);

/// Integer cluster data: one random center per class, uniform noise around
/// it, clipped to [0, value_bound].
Dataset synthesize_clusters(const std::vector<int>& classes, int dimension, int per_class,
                            std::uint64_t seed, int value_bound = 20);

/// 28x28 grayscale digit images rendered from a fixed 5x7 glyph per digit,
/// with per-pixel noise and small random shifts. Deterministic by seed.
Dataset synthesize_digit_images(const std::vector<int>& digits, int per_digit,
                                std::uint64_t seed);

}  // namespace fewbit
