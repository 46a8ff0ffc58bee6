// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace usr {

// xoshiro256** seeded through splitmix64. The bit stream and every derived
// draw below are fully specified, so sequences match across platforms and
// standard libraries (unlike the <random> distributions).
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0);
  static Rng from_state(const State& state);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();

  // Independent child stream; advances this generator by one draw.
  Rng split();

  const State& state() const { return state_; }

 private:
  State state_{};
};

}  // namespace usr
