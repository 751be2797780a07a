#include "fewbit/inference.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace fewbit {

ActivationTrace forward(const Architecture& arch, const WeightAssignment& weights,
                        std::span<const double> x) {
  if (static_cast<int>(x.size()) != arch.inputs()) {
    throw std::invalid_argument("input width does not match the architecture");
  }
  ActivationTrace trace;
  trace.input.assign(x.begin(), x.end());
  trace.pre.resize(arch.depth());
  trace.activations.resize(arch.depth());

  std::vector<double> z(x.begin(), x.end());
  for (int l = 1; l <= arch.depth(); ++l) {
    const int n_from = arch.layer_sizes[l - 1];
    const int n_to = arch.layer_sizes[l];
    trace.pre[l - 1].assign(n_to, 0.0);
    trace.activations[l - 1].assign(n_to, 0);
    std::vector<double> next(n_to);
    for (int j = 0; j < n_to; ++j) {
      double sum = 0.0;
      for (int i = 0; i < n_from; ++i) {
        sum += z[i] * weights.at(l, i, j);
      }
      trace.pre[l - 1][j] = sum;
      const int bit = sum >= 0.0 ? +1 : -1;
      trace.activations[l - 1][j] = bit;
      next[j] = bit;
    }
    z = std::move(next);
  }
  return trace;
}

std::optional<int> decode(std::span<const int> bits, const ClassEncoding& enc) {
  return enc.decode(bits);
}

bool verify_against_milp(const ActivationTrace& trace, const MilpModel& model,
                         std::span<const double> incumbent, int sample_index) {
  const int depth = static_cast<int>(trace.activations.size());
  auto lookup = [&](const std::string& name) {
    const int var = model.find_variable(name);
    if (var < 0) throw std::invalid_argument("incumbent lacks variable " + name);
    return incumbent[var];
  };
  for (int l = 1; l < depth; ++l) {
    for (std::size_t j = 0; j < trace.activations[l - 1].size(); ++j) {
      const double expected = trace.activations[l - 1][j] > 0 ? 1.0 : 0.0;
      const double got = std::round(lookup(u_name(sample_index, l, static_cast<int>(j))));
      if (got != expected) return false;
    }
  }
  for (int l = 1; l <= depth; ++l) {
    const std::size_t n_from = l == 1 ? trace.input.size() : trace.activations[l - 2].size();
    for (std::size_t i = 0; i < n_from; ++i) {
      const double z = l == 1 ? trace.input[i] : trace.activations[l - 2][i];
      for (std::size_t j = 0; j < trace.activations[l - 1].size(); ++j) {
        const double w = lookup(w_name(l, static_cast<int>(i), static_cast<int>(j)));
        const double c =
            lookup(c_name(sample_index, static_cast<int>(i), l, static_cast<int>(j)));
        if (std::abs(c - z * w) > 1e-6) return false;
      }
    }
  }
  return true;
}

std::vector<int> forward_bits(const Architecture& arch, const WeightAssignment& weights,
                              std::span<const double> x) {
  if (arch.weight_bound != 1) {
    throw std::invalid_argument("bit-packed evaluation is defined for P = 1 only");
  }
  if (static_cast<int>(x.size()) != arch.inputs()) {
    throw std::invalid_argument("input width does not match the architecture");
  }
  // Layer 1 consumes raw features; deeper layers run on packed ±1 words.
  const int n1 = arch.layer_sizes[1];
  std::vector<std::uint64_t> z((n1 + 63) / 64, 0);
  auto set_bit = [](std::vector<std::uint64_t>& bits, int i) {
    bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  };
  for (int j = 0; j < n1; ++j) {
    double sum = 0.0;
    for (int i = 0; i < arch.inputs(); ++i) sum += x[i] * weights.at(1, i, j);
    if (sum >= 0.0) set_bit(z, j);
  }

  int width = n1;
  for (int l = 2; l <= arch.depth(); ++l) {
    const int n_to = arch.layer_sizes[l];
    std::vector<std::uint64_t> next((n_to + 63) / 64, 0);
    for (int j = 0; j < n_to; ++j) {
      std::vector<std::uint64_t> plus(z.size(), 0), minus(z.size(), 0);
      int plus_count = 0, minus_count = 0;
      for (int i = 0; i < width; ++i) {
        const int w = weights.at(l, i, j);
        if (w == 1) { set_bit(plus, i); ++plus_count; }
        else if (w == -1) { set_bit(minus, i); ++minus_count; }
      }
      // sum over ±1 inputs: 2*popcount(z&mask) - |mask| per weight sign
      long long pre = 0;
      for (std::size_t word = 0; word < z.size(); ++word) {
        pre += 2 * std::popcount(z[word] & plus[word]);
        pre -= 2 * std::popcount(z[word] & minus[word]);
      }
      pre -= plus_count;
      pre += minus_count;
      if (pre >= 0) set_bit(next, j);
    }
    z = std::move(next);
    width = n_to;
  }

  std::vector<int> out(arch.outputs());
  for (int j = 0; j < arch.outputs(); ++j) {
    out[j] = (z[j >> 6] >> (j & 63)) & 1 ? +1 : -1;
  }
  return out;
}

std::vector<std::vector<double>> implied_margins(const Architecture& arch,
                                                 const WeightAssignment& weights,
                                                 std::span<const LabeledSample> samples) {
  const int depth = arch.depth();
  std::vector<std::vector<double>> margins(depth);
  for (int l = 1; l <= depth; ++l) {
    margins[l - 1].assign(arch.layer_sizes[l], std::numeric_limits<double>::infinity());
  }
  for (const auto& sample : samples) {
    const ActivationTrace trace = forward(arch, weights, sample.features);
    for (int l = 1; l < depth; ++l) {
      for (int j = 0; j < arch.layer_sizes[l]; ++j) {
        const double pre = trace.pre[l - 1][j];
        const double slack = trace.activations[l - 1][j] > 0 ? pre : -pre;
        margins[l - 1][j] = std::min(margins[l - 1][j], slack);
      }
    }
    for (int j = 0; j < arch.outputs(); ++j) {
      const double agree = sample.target_bits.at(j) * trace.pre[depth - 1][j];
      margins[depth - 1][j] = std::min(margins[depth - 1][j], agree);
    }
  }
  return margins;
}

}  // namespace fewbit
