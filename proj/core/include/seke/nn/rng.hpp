// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace seke::nn {

/// Seeded random stream identified by a label.
///
/// The same (seed, label) pair always yields the same draw sequence, and
/// substreams derived with different labels are statistically independent.
/// Each purpose (init, dropout, gate noise, shuffling) gets its own substream
/// so adding draws in one place never perturbs another.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::string_view label = "root");

  RngStream substream(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace seke::nn
