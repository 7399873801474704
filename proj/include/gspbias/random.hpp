// Copyright 2026 The gspbias Authors
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

#ifndef GSPBIAS_RANDOM_HPP_
#define GSPBIAS_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace gspbias {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t Mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a master seed and a tuple of indices into one stream key. Distinct
// tuples give statistically independent streams.
constexpr std::uint64_t StreamKey(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = Mix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t p : path) {
    key = Mix64(key + 0x9e3779b97f4a7c15ULL + Mix64(p + 0x632be59bd9b4e019ULL));
  }
  return key;
}

// Counter-based generator: the n-th output is Mix64(key + n * golden), so a
// stream is fully determined by (key, counter) and never depends on which
// thread consumed it. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return Mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform double in [0, 1) from exactly one 64-bit draw.
  constexpr double Uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace gspbias

#endif  // GSPBIAS_RANDOM_HPP_
