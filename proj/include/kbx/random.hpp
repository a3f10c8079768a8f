// Copyright 2026 The kbx Authors.
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
#pragma once

// Seeded randomness with results that are identical across standard library
// implementations. std::mt19937_64 output is fixed by the standard; the
// distributions and std::shuffle are not, so bounded draws and shuffles are
// done here.

#include <cstdint>
#include <random>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace kbx {

inline uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-record seed, so worker scheduling never changes output.
inline uint64_t derive_seed(uint64_t global_seed, std::string_view doc_id,
                            std::string_view salt = {}) {
  return splitmix64(splitmix64(global_seed) ^ fnv1a64(doc_id) ^
                    splitmix64(fnv1a64(salt)));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices from [0, n) in draw order. Dense draws use a partial
  // Fisher-Yates over the materialized range; sparse draws use rejection so
  // huge ranges are never materialized.
  std::vector<uint64_t> sample(uint64_t n, uint64_t k) {
    if (k > n) k = n;
    std::vector<uint64_t> out;
    out.reserve(k);
    if (k * 2 >= n) {
      std::vector<uint64_t> all(n);
      for (uint64_t i = 0; i < n; ++i) all[i] = i;
      for (uint64_t i = 0; i < k; ++i) {
        uint64_t j = i + below(n - i);
        std::swap(all[i], all[j]);
        out.push_back(all[i]);
      }
      return out;
    }
    std::unordered_set<uint64_t> seen;
    while (out.size() < k) {
      uint64_t x = below(n);
      if (seen.insert(x).second) out.push_back(x);
    }
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kbx
