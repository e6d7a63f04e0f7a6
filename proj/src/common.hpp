// Copyright 2026 the nfad authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NFAD_COMMON_HPP
#define NFAD_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace nfad {

// Error taxonomy. Validation failures (bad parameters, malformed input,
// shape mismatches) map to process exit code 1; everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or out-of-range parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, manifests, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// Tensor/layer shape violations.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Filesystem and other runtime failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Numerical degeneracy (singular 1x1 convolution, zero actnorm scale).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

inline bool is_validation_error(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) != nullptr ||
         dynamic_cast<const DataError*>(&e) != nullptr ||
         dynamic_cast<const ShapeError*>(&e) != nullptr ||
         dynamic_cast<const ContractError*>(&e) != nullptr;
}

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// distributions are hand-rolled so streams are identical across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (pairwise, one spare cached).
  double normal();

  // Unbiased integer in [0, bound) by rejection.
  uint64_t integer(uint64_t bound);

  // In-place Fisher-Yates shuffle with a fixed draw order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(integer(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64-style mix for deriving stable per-item seeds from a master
// seed plus item coordinates.
uint64_t mix_seed(uint64_t a, uint64_t b);

}  // namespace nfad

#endif  // NFAD_COMMON_HPP
