// Copyright 2026 The msot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Philox4x32-10 counter-based generator. Output depends only on (key,
// counter), so streams are reproducible across platforms and can be split by
// key without shared state.

#ifndef MSOT_RNG_HPP_
#define MSOT_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace msot {

class Philox {
 public:
  using result_type = std::uint32_t;

  Philox(std::uint64_t seed, std::uint64_t stream = 0) {
    key_ = {static_cast<std::uint32_t>(seed),
            static_cast<std::uint32_t>(seed >> 32)};
    counter_ = {0, 0, static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (index_ == 4) {
      block_ = Round10(counter_, key_);
      Increment();
      index_ = 0;
    }
    return block_[index_++];
  }

  std::uint64_t NextU64() {
    const std::uint64_t hi = (*this)();
    return (hi << 32) | (*this)();
  }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n); n > 0. Lemire-style rejection keeps it
  // unbiased.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; no cached second sample so the stream
  // position is a pure function of the number of calls.
  double Normal() {
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block Round10(Block ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

  void Increment() {
    if (++counter_[0] == 0) ++counter_[1];
  }

  Key key_;
  Block counter_;
  Block block_{};
  int index_ = 4;
};

}  // namespace msot

#endif  // MSOT_RNG_HPP_
