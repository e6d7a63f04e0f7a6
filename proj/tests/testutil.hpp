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

// Independent oracles used by the tests: a naive DFT, finite-difference
// helpers and a Gaussian-elimination determinant. These deliberately avoid
// the library's own FFT/tape/inverse code paths.

#ifndef NFAD_TESTS_TESTUTIL_HPP
#define NFAD_TESTS_TESTUTIL_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "ad/tensor.hpp"
#include "common.hpp"

namespace nfad::testutil {

// O(n^2) DFT magnitude-squared spectrum of a real frame.
inline std::vector<double> naive_power_spectrum(const std::vector<double>& frame) {
  const size_t n = frame.size();
  std::vector<double> power(n / 2 + 1);
  for (size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t t = 0; t < n; ++t) {
      double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                   static_cast<double>(n);
      acc += frame[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    power[k] = std::norm(acc);
  }
  return power;
}

// Central finite difference of a scalar function at x.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative error with an absolute floor for near-zero references.
inline double rel_err(double got, double want, double floor = 1e-3) {
  double scale = std::max({std::fabs(got), std::fabs(want), floor});
  return std::fabs(got - want) / scale;
}

// ln|det A| via Gaussian elimination with partial pivoting (independent of
// the library's matrix code).
inline double logabsdet_ref(std::vector<double> a, int n) {
  double logdet = 0.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a[static_cast<size_t>(r) * n + col]) >
          std::fabs(a[static_cast<size_t>(pivot) * n + col]))
        pivot = r;
    if (pivot != col)
      for (int k = 0; k < n; ++k)
        std::swap(a[static_cast<size_t>(pivot) * n + k],
                  a[static_cast<size_t>(col) * n + k]);
    double p = a[static_cast<size_t>(col) * n + col];
    logdet += std::log(std::fabs(p));
    for (int r = col + 1; r < n; ++r) {
      double f = a[static_cast<size_t>(r) * n + col] / p;
      for (int k = col; k < n; ++k)
        a[static_cast<size_t>(r) * n + k] -= f * a[static_cast<size_t>(col) * n + k];
    }
  }
  return logdet;
}

template <typename S>
Tensor<S> random_tensor(std::vector<int> dims, Rng& rng, double scale = 1.0,
                        bool requires_grad = false) {
  Tensor<S> t(std::move(dims));
  for (S& v : t.data) v = static_cast<S>(scale * rng.normal());
  t.requires_grad = requires_grad;
  return t;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
  return m;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace nfad::testutil

#endif  // NFAD_TESTS_TESTUTIL_HPP
