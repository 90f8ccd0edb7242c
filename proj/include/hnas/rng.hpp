// Copyright 2026 The hnas Authors.
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

#ifndef HNAS_RNG_HPP_
#define HNAS_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

namespace hnas {

// Seedable generator with a portable output stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The std:: distributions are implementation-defined, so the
// conversions to doubles and bounded integers are done here instead; that
// keeps every draw identical across standard libraries and platforms.
//
// The full engine state round-trips through state()/set_state(), which is
// what checkpoints store.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  int index(std::size_t n) { return static_cast<int>(below(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  std::string state() const;
  void set_state(const std::string& state);

  // Derives an independent seed for sub-stream `stream` of `seed`
  // (splitmix64 finalizer over the pair).
  static std::uint64_t split(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace hnas

#endif  // HNAS_RNG_HPP_
