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

#ifndef NFAD_AD_TAPE_HPP
#define NFAD_AD_TAPE_HPP

#include <array>
#include <utility>
#include <vector>

#include "ad/tensor.hpp"

namespace nfad {

// Reverse-mode tape over the operator set used by the flow and VAE models.
// Values are computed eagerly; backward() walks the recorded nodes in
// reverse creation order (which is a topological order by construction).
// A tape is single-threaded; individual ops may parallelize internally over
// independent output elements, which keeps results bit-deterministic.
template <typename S>
class Tape {
 public:
  using Id = int;

  // Leaf holding a (possibly trainable) value.
  Id input(const Tensor<S>& t);
  // Leaf that never receives a gradient.
  Id constant(Tensor<S> t);

  // Elementwise; shapes must match exactly (no broadcasting).
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scalar_mul(Id a, S c);
  Id add_scalar(Id a, S c);
  Id relu(Id a);
  Id tanh(Id a);
  Id exp(Id a);
  Id log(Id a);

  // (M,K) @ (K,N) -> (M,N), 2-D only.
  Id matmul(Id a, Id b);

  // x:(N,C,H,W), w:(O,C,kh,kw), b:(O); stride 1, same padding (odd kernels).
  Id conv2d(Id x, Id w, Id b);

  // Reductions to a scalar (shape {1}).
  Id sum(Id a);
  Id mean(Id a);

  // Channel ops on (N,C,H,W): split into two halves along C; concat along C;
  // add/scale a per-channel vector of length C.
  std::pair<Id, Id> channel_split(Id x);
  Id channel_concat(Id a, Id b);
  Id channel_add(Id x, Id bias);
  Id channel_scale(Id x, Id scale);

  Id reshape(Id a, std::vector<int> dims);

  // Space-to-depth on 2x2 neighborhoods: (N,C,H,W) -> (N,4C,H/2,W/2) with
  // output channel 4c + 2*di + dj; unsqueeze is the exact inverse. Both are
  // volume-preserving permutations (log-det contribution 0).
  Id squeeze2(Id x);
  Id unsqueeze2(Id x);

  // ln|det W| for a square matrix; errors if |det| < 1e-12.
  Id mat_logabsdet(Id w);

  // Gradient of `out` (a scalar node) w.r.t. every reachable node that
  // requires grad. Accumulates across multiple uses of a node.
  void backward(Id out);

  const Tensor<S>& val(Id id) const { return nodes_[check(id)].value; }
  Tensor<S>& mutable_val(Id id) { return nodes_[check(id)].value; }
  bool has_grad(Id id) const;
  const Tensor<S>& grad(Id id) const;
  // Mutable access (gradient clipping); requires backward() to have run.
  Tensor<S>& mutable_grad(Id id) {
    return const_cast<Tensor<S>&>(static_cast<const Tape*>(this)->grad(id));
  }
  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kScalarMul,
    kAddScalar,
    kRelu,
    kTanh,
    kExp,
    kLog,
    kMatMul,
    kConv2d,
    kSum,
    kMean,
    kSplitLo,
    kSplitHi,
    kConcat,
    kChannelAdd,
    kChannelScale,
    kReshape,
    kSqueeze2,
    kUnsqueeze2,
    kLogAbsDet,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::array<Id, 3> in{-1, -1, -1};
    Tensor<S> value;
    Tensor<S> grad;  // allocated only during backward
    bool requires_grad = false;
    S scalar = S(0);
    std::vector<S> aux;  // op-specific (e.g. inverse matrix for logabsdet)
  };

  Id push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }
  Id check(Id id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
      throw ShapeError("tape: invalid node id " + std::to_string(id));
    return id;
  }
  Node& at(Id id) { return nodes_[static_cast<size_t>(check(id))]; }
  const Node& at(Id id) const { return nodes_[static_cast<size_t>(check(id))]; }

  Id unary(Op op, Id a, S scalar = S(0));
  Id binary_same_shape(Op op, const char* name, Id a, Id b);
  void require_4d(const char* opname, const Tensor<S>& t) const;
  void backward_node(Id id);
  void accumulate(Id target, const Tensor<S>& g);

  std::vector<Node> nodes_;
};

// Gauss-Jordan inverse with partial pivoting; returns ln|det|.
// Throws on |det| < 1e-12. Shared by the tape op and the flow inverse path.
template <typename S>
double mat_inverse_logabsdet(const Tensor<S>& w, Tensor<S>* inverse);

extern template class Tape<float>;
extern template class Tape<double>;
extern template double mat_inverse_logabsdet<float>(const Tensor<float>&, Tensor<float>*);
extern template double mat_inverse_logabsdet<double>(const Tensor<double>&, Tensor<double>*);

}  // namespace nfad

#endif  // NFAD_AD_TAPE_HPP
