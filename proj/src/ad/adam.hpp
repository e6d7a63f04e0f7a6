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

#ifndef NFAD_AD_ADAM_HPP
#define NFAD_AD_ADAM_HPP

#include <vector>

#include "ad/tensor.hpp"

namespace nfad {

// Adam with bias correction: p <- p - lr * m_hat / (sqrt(v_hat) + eps).
template <typename S>
class Adam {
 public:
  explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // params and grads are parallel arrays; moment buffers are created on the
  // first call and shape-checked afterwards.
  void step(const std::vector<Tensor<S>*>& params,
            const std::vector<const Tensor<S>*>& grads);

  int64_t steps() const { return t_; }
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Tensor<S>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace nfad

#endif  // NFAD_AD_ADAM_HPP
