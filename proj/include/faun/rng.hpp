// Copyright 2026 The faunsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAUN_RNG_HPP
#define FAUN_RNG_HPP

#include <cstdint>
#include <random>

namespace faun {

// Named randomness streams derived from one master seed. Every stochastic
// component draws from its own stream so that any single component can be
// re-seeded identically in isolation (e.g. in tests).
enum class Stream : std::uint64_t {
  dataset = 1,
  test_split = 2,
  proxy_split = 3,
  partition = 4,
  model_init = 5,
  client_batch = 6,    // per-round, per-client mini-batch shuffling (training)
  poison_select = 7,   // per-client backdoor row selection
  attack_jitter = 8,   // per-round trim jitter
  unlearn_batch = 9,   // per-round, per-client batching during unlearning
  federaser_batch = 10,
  eval = 11,
};

// SplitMix64 finalizer; the standard constants.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: the master seed is mixed with the stream
// tag and two free indices (typically round and client id). Collision-free
// for all practical index ranges and stable across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
  std::uint64_t x = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  x = splitmix64(x ^ (static_cast<std::uint64_t>(stream) * 0xbb67ae8584caa73bULL));
  x = splitmix64(x ^ ((a + 1) * 0x3c6ef372fe94f82bULL));
  x = splitmix64(x ^ ((b + 1) * 0xa54ff53a5f1d36f1ULL));
  return x;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline std::mt19937_64 make_engine(std::uint64_t master, Stream stream,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(master, stream, a, b));
}

}  // namespace faun

#endif  // FAUN_RNG_HPP
