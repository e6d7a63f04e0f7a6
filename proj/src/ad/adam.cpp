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

#include "ad/adam.hpp"

#include <cmath>

namespace nfad {

template <typename S>
void Adam<S>::step(const std::vector<Tensor<S>*>& params,
                   const std::vector<const Tensor<S>*>& grads) {
  if (params.size() != grads.size())
    throw ShapeError("adam: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  if (m_.empty()) {
    for (const Tensor<S>* p : params) {
      m_.push_back(Tensor<S>::zeros(p->dims));
      v_.push_back(Tensor<S>::zeros(p->dims));
    }
  }
  if (m_.size() != params.size())
    throw ShapeError("adam: parameter count changed between steps");

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<S>& p = *params[i];
    const Tensor<S>& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(m_[i]))
      throw ShapeError("adam: param " + p.shape() + " vs grad " + g.shape());
    S* pd = p.data.data();
    const S* gd = g.data.data();
    S* md = m_[i].data.data();
    S* vd = v_[i].data.data();
    for (size_t k = 0; k < p.data.size(); ++k) {
      double gv = static_cast<double>(gd[k]);
      double m = beta1_ * static_cast<double>(md[k]) + (1.0 - beta1_) * gv;
      double v = beta2_ * static_cast<double>(vd[k]) + (1.0 - beta2_) * gv * gv;
      md[k] = static_cast<S>(m);
      vd[k] = static_cast<S>(v);
      double m_hat = m / bc1;
      double v_hat = v / bc2;
      pd[k] = static_cast<S>(static_cast<double>(pd[k]) -
                             lr_ * m_hat / (std::sqrt(v_hat) + eps_));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace nfad
