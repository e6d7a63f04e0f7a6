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

#ifndef NFAD_AD_TENSOR_HPP
#define NFAD_AD_TENSOR_HPP

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "common.hpp"

namespace nfad {

// Dense row-major tensor. Training runs with S = float; the oracle tests
// instantiate S = double.
template <typename S>
struct Tensor {
  std::vector<int> dims;
  std::vector<S> data;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    data.assign(static_cast<size_t>(numel_of(dims)), S(0));
  }
  Tensor(std::vector<int> d, std::vector<S> values)
      : dims(std::move(d)), data(std::move(values)) {
    if (numel_of(dims) != static_cast<int64_t>(data.size()))
      throw ShapeError("tensor: dims " + shape_str(dims) + " do not match " +
                       std::to_string(data.size()) + " values");
  }

  static int64_t numel_of(const std::vector<int>& d) {
    int64_t n = 1;
    for (int e : d) n *= e;
    return n;
  }

  static std::string shape_str(const std::vector<int>& d) {
    std::string s = "(";
    for (size_t i = 0; i < d.size(); ++i)
      s += (i ? "," : "") + std::to_string(d[i]);
    return s + ")";
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  std::string shape() const { return shape_str(dims); }
  bool same_shape(const Tensor& o) const { return dims == o.dims; }

  static Tensor zeros(std::vector<int> d) { return Tensor(std::move(d)); }
  static Tensor full(std::vector<int> d, S v) {
    Tensor t(std::move(d));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(S v) { return Tensor({1}, {v}); }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.dims = dims;
    out.requires_grad = requires_grad;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
    return out;
  }
};

}  // namespace nfad

#endif  // NFAD_AD_TENSOR_HPP
