/*
 * Copyright 2026 The Fedguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDGUARD_RANDOM_H_
#define FEDGUARD_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <cmath>
#include <random>
#include <utility>

namespace fedguard {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent, reproducible streams
// (per client, per round, ...) from a single experiment seed.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t DeriveSeed(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> salt) {
  std::uint64_t s = Mix64(seed);
  for (std::uint64_t v : salt) s = Mix64(s ^ v);
  return s;
}

inline Rng MakeRng(std::uint64_t seed,
                   std::initializer_list<std::uint64_t> salt = {}) {
  return Rng(DeriveSeed(seed, salt));
}

// Uniform draw in [0, 1) built from raw engine output so that results do not
// depend on the standard library's distribution implementation.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformRange(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * Uniform01(rng);
}

// Integer in [0, n), n > 0.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(Uniform01(rng) * static_cast<double>(n)) %
         n;
}

template <typename It>
void Shuffle(It first, It last, Rng& rng) {
  auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    auto j = static_cast<decltype(i)>(
        UniformIndex(rng, static_cast<std::uint64_t>(i + 1)));
    std::swap(first[i], first[j]);
  }
}

// Box-Muller; one draw per call.
inline double Normal(Rng& rng, double mean, double stddev) {
  double u1 = Uniform01(rng);
  double u2 = Uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  constexpr double kTwoPi = 6.283185307179586;
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace fedguard

#endif  // FEDGUARD_RANDOM_H_
