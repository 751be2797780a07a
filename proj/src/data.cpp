#include "fewbit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace fewbit {

namespace {

std::uint32_t read_be32(std::span<const unsigned char> bytes, std::size_t offset,
                        const char* what) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(std::string("truncated ") + what + " at offset " +
                      std::to_string(offset));
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::vector<unsigned char> read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<std::size_t> Dataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label == label) out.push_back(i);
  }
  return out;
}

Dataset load_idx(std::span<const unsigned char> images, std::span<const unsigned char> labels) {
  if (read_be32(images, 0, "image magic") != 0x00000803u) {
    throw FormatError("bad image magic at offset 0");
  }
  const std::uint32_t count = read_be32(images, 4, "image count");
  const std::uint32_t rows = read_be32(images, 8, "image rows");
  const std::uint32_t cols = read_be32(images, 12, "image cols");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::size_t expected_image_bytes = 16 + static_cast<std::size_t>(count) * pixels;
  if (images.size() < expected_image_bytes) {
    throw FormatError("truncated image payload at offset " + std::to_string(images.size()));
  }
  if (images.size() > expected_image_bytes) {
    throw FormatError("surplus byte at offset " + std::to_string(expected_image_bytes));
  }

  if (read_be32(labels, 0, "label magic") != 0x00000801u) {
    throw FormatError("bad label magic at offset 0");
  }
  const std::uint32_t label_count = read_be32(labels, 4, "label count");
  if (label_count != count) {
    throw FormatError("image/label count mismatch: " + std::to_string(count) + " vs " +
                      std::to_string(label_count));
  }
  const std::size_t expected_label_bytes = 8 + label_count;
  if (labels.size() < expected_label_bytes) {
    throw FormatError("truncated label payload at offset " + std::to_string(labels.size()));
  }
  if (labels.size() > expected_label_bytes) {
    throw FormatError("surplus byte at offset " + std::to_string(expected_label_bytes));
  }

  Dataset dataset;
  dataset.integer_valued = true;
  dataset.samples.resize(count);
  std::set<int> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    const unsigned char label = labels[8 + k];
    if (label > 9) {
      throw FormatError("label " + std::to_string(label) + " at offset " +
                        std::to_string(8 + k) + " (valid labels 0-9)");
    }
    auto& sample = dataset.samples[k];
    sample.label = label;
    seen.insert(label);
    sample.features.resize(pixels);
    const std::size_t base = 16 + static_cast<std::size_t>(k) * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      sample.features[p] = static_cast<double>(images[base + p]);
    }
  }
  dataset.classes.assign(seen.begin(), seen.end());
  return dataset;
}

Dataset load_idx_files(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_binary(images);
  const auto label_bytes = read_binary(labels);
  return load_idx(image_bytes, label_bytes);
}

TrainTestSplit load_csv_heart(const std::string& text, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie strictly between 0 and 1");
  }
  std::vector<RawSample> rows;
  int dropped = 0;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 14) {
      throw FormatError("row " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected 14");
    }
    RawSample sample;
    bool missing_cell = false;
    bool header_row = false;
    for (std::size_t col = 0; col < cells.size(); ++col) {
      std::string cell = cells[col];
      cell.erase(std::remove(cell.begin(), cell.end(), ' '), cell.end());
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      const bool numeric = ec == std::errc{} && ptr == cell.data() + cell.size();
      if (!numeric) {
        if (line_no == 1 && col == 0 && cell != "?" && !cell.empty()) {
          header_row = true;  // auto-detected by a non-numeric first cell
          break;
        }
        if (cell == "?" || cell.empty()) {
          missing_cell = true;  // row dropped
          break;
        }
        throw FormatError("non-numeric cell at row " + std::to_string(line_no) + " column " +
                          std::to_string(col + 1));
      }
      if (col < 13) sample.features.push_back(value);
      else sample.label = value != 0.0 ? 1 : 0;
    }
    if (header_row) continue;
    if (missing_cell) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(sample));
  }
  if (rows.empty()) throw FormatError("no usable rows in heart data");

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  const std::size_t test_count =
      static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(rows.size())));

  TrainTestSplit split;
  split.dropped_rows = dropped;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    (pos < test_count ? split.test : split.train).push_back(rows[order[pos]]);
  }
  return split;
}

TrainTestSplit load_csv_heart_file(const std::filesystem::path& path, double test_fraction,
                                   std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_heart(buf.str(), test_fraction, seed);
}

std::map<int, std::vector<std::size_t>> sample_per_class(const Dataset& dataset,
                                                         const std::vector<int>& classes,
                                                         int per_class, std::uint64_t seed,
                                                         std::set<std::size_t>& exclusion) {
  if (per_class < 0) throw std::invalid_argument("per-class count must be nonnegative");
  std::mt19937_64 gen(seed);
  std::map<int, std::vector<std::size_t>> drawn;
  for (int cls : classes) {
    std::vector<std::size_t> unseen;
    for (std::size_t idx : dataset.indices_of(cls)) {
      if (!exclusion.contains(idx)) unseen.push_back(idx);
    }
    if (static_cast<int>(unseen.size()) < per_class) {
      throw CapacityError("class " + std::to_string(cls) + " has only " +
                          std::to_string(unseen.size()) + " unseen samples, need " +
                          std::to_string(per_class));
    }
    std::vector<std::size_t> picks;
    std::sample(unseen.begin(), unseen.end(), std::back_inserter(picks), per_class, gen);
    for (std::size_t idx : picks) exclusion.insert(idx);
    drawn[cls] = std::move(picks);
  }
  return drawn;
}

std::vector<std::size_t> build_test_set(const Dataset& dataset, const std::vector<int>& classes,
                                        int per_class, const std::set<std::size_t>& exclusion) {
  std::vector<std::size_t> test;
  for (int cls : classes) {
    int taken = 0;
    for (std::size_t idx : dataset.indices_of(cls)) {
      if (taken == per_class) break;
      if (exclusion.contains(idx)) continue;
      test.push_back(idx);
      ++taken;
    }
    if (taken < per_class) {
      throw CapacityError("class " + std::to_string(cls) + " has only " +
                          std::to_string(taken) + " unseen samples for testing, need " +
                          std::to_string(per_class));
    }
  }
  return test;
}

std::vector<double> downsample(std::span<const double> image, int width, int height,
                               int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (static_cast<int>(image.size()) != width * height) {
    throw std::invalid_argument("image size does not match width*height");
  }
  if (factor == 1) return std::vector<double>(image.begin(), image.end());
  const int out_w = (width + factor - 1) / factor;
  const int out_h = (height + factor - 1) / factor;
  const int pad_w = out_w * factor - width;
  const int pad_h = out_h * factor - height;
  const int left = pad_w / 2;
  const int top = pad_h / 2;
  auto pixel = [&](int row, int col) {
    // edge replication for padded positions
    row = std::clamp(row - top, 0, height - 1);
    col = std::clamp(col - left, 0, width - 1);
    return image[static_cast<std::size_t>(row) * width + col];
  };
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      double sum = 0.0;
      for (int dr = 0; dr < factor; ++dr) {
        for (int dc = 0; dc < factor; ++dc) {
          sum += pixel(r * factor + dr, c * factor + dc);
        }
      }
      const double mean = sum / (factor * factor);
      out[static_cast<std::size_t>(r) * out_w + c] = std::floor(mean + 0.5);
    }
  }
  return out;
}

Dataset downsample_dataset(const Dataset& dataset, int side, int factor) {
  Dataset out;
  out.classes = dataset.classes;
  out.integer_valued = dataset.integer_valued;
  out.samples.reserve(dataset.samples.size());
  for (const auto& sample : dataset.samples) {
    out.samples.push_back({downsample(sample.features, side, side, factor), sample.label});
  }
  return out;
}

Dataset synthesize_clusters(const std::vector<int>& classes, int dimension, int per_class,
                            std::uint64_t seed, int value_bound) {
  if (dimension < 1 || per_class < 1 || value_bound < 1) {
    throw std::invalid_argument("cluster synthesis needs positive dimension, count and bound");
  }
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> center_dist(0, value_bound);
  const int spread = std::max(1, value_bound / 5);
  std::uniform_int_distribution<int> noise(-spread, spread);

  Dataset dataset;
  dataset.integer_valued = true;
  std::set<int> seen;
  for (int cls : classes) {
    seen.insert(cls);
    std::vector<int> center(dimension);
    for (int& c : center) c = center_dist(gen);
    for (int n = 0; n < per_class; ++n) {
      RawSample sample;
      sample.label = cls;
      sample.features.resize(dimension);
      for (int d = 0; d < dimension; ++d) {
        sample.features[d] = std::clamp(center[d] + noise(gen), 0, value_bound);
      }
      dataset.samples.push_back(std::move(sample));
    }
  }
  dataset.classes.assign(seen.begin(), seen.end());
  return dataset;
}

namespace {

// 5x7 glyphs, one row per string, '#' = ink.
constexpr const char* kDigitGlyphs[10][7] = {
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},  // 0
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},  // 1
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},  // 2
    {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},  // 3
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},  // 4
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},  // 5
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},  // 6
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},  // 7
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},  // 8
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},  // 9
};

}  // namespace

Dataset synthesize_digit_images(const std::vector<int>& digits, int per_digit,
                                std::uint64_t seed) {
  if (per_digit < 1) throw std::invalid_argument("need at least one image per digit");
  for (int d : digits) {
    if (d < 0 || d > 9) throw std::invalid_argument("digits must lie in 0-9");
  }
  constexpr int kSide = 28;
  constexpr int kCell = 4;  // glyph cell -> 4x4 pixel block (20x28 glyph area)
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> shift(-2, 2);
  std::uniform_int_distribution<int> ink_noise(-30, 30);
  std::uniform_int_distribution<int> bg_noise(0, 25);

  Dataset dataset;
  dataset.integer_valued = true;
  std::set<int> seen;
  for (int d : digits) {
    seen.insert(d);
    for (int n = 0; n < per_digit; ++n) {
      RawSample sample;
      sample.label = d;
      sample.features.assign(kSide * kSide, 0.0);
      const int dx = shift(gen);
      const int dy = shift(gen);
      for (int row = 0; row < kSide; ++row) {
        for (int col = 0; col < kSide; ++col) {
          const int glyph_row = (row - dy) / kCell;
          const int glyph_col = (col - dx - 4) / kCell;
          bool ink = false;
          if ((row - dy) >= 0 && glyph_row < 7 && (col - dx - 4) >= 0 && glyph_col < 5) {
            ink = kDigitGlyphs[d][glyph_row][glyph_col] == '#';
          }
          const int value = ink ? std::clamp(220 + ink_noise(gen), 0, 255) : bg_noise(gen);
          sample.features[static_cast<std::size_t>(row) * kSide + col] = value;
        }
      }
      dataset.samples.push_back(std::move(sample));
    }
  }
  dataset.classes.assign(seen.begin(), seen.end());
  return dataset;
}

}  // namespace fewbit
