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

#include "ad/tape.hpp"

#include <cmath>
#include <cstring>

#include <Eigen/Dense>

namespace nfad {

namespace {

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapM = Eigen::Map<MatRM<S>>;
template <typename S>
using CMapM = Eigen::Map<const MatRM<S>>;

// Gathers the (C*kh*kw) x (H*W) patch matrix for one sample.
template <typename S>
void im2col(const S* x, int c, int h, int w, int kh, int kw, S* col) {
  const int ph = kh / 2, pw = kw / 2;
  for (int ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        S* row = col + ((static_cast<size_t>(ci) * kh + ki) * kw + kj) *
                           (static_cast<size_t>(h) * w);
        for (int oh = 0; oh < h; ++oh) {
          int ih = oh + ki - ph;
          if (ih < 0 || ih >= h) {
            std::memset(row + static_cast<size_t>(oh) * w, 0, sizeof(S) * w);
            continue;
          }
          const S* src = x + (static_cast<size_t>(ci) * h + ih) * w;
          S* dst = row + static_cast<size_t>(oh) * w;
          for (int ow = 0; ow < w; ++ow) {
            int iw = ow + kj - pw;
            dst[ow] = (iw < 0 || iw >= w) ? S(0) : src[iw];
          }
        }
      }
    }
  }
}

// Scatter-adds a column-gradient matrix back into one sample's input grad.
template <typename S>
void col2im_add(const S* col, int c, int h, int w, int kh, int kw, S* dx) {
  const int ph = kh / 2, pw = kw / 2;
  for (int ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const S* row = col + ((static_cast<size_t>(ci) * kh + ki) * kw + kj) *
                                 (static_cast<size_t>(h) * w);
        for (int oh = 0; oh < h; ++oh) {
          int ih = oh + ki - ph;
          if (ih < 0 || ih >= h) continue;
          S* dst = dx + (static_cast<size_t>(ci) * h + ih) * w;
          const S* src = row + static_cast<size_t>(oh) * w;
          for (int ow = 0; ow < w; ++ow) {
            int iw = ow + kj - pw;
            if (iw >= 0 && iw < w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename S>
double mat_inverse_logabsdet(const Tensor<S>& w, Tensor<S>* inverse) {
  if (w.dims.size() != 2 || w.dims[0] != w.dims[1])
    throw ShapeError("mat_logabsdet: want square matrix, got " + w.shape());
  const int n = w.dims[0];
  // Gauss-Jordan on [A | I] with partial pivoting, in double.
  std::vector<double> a(static_cast<size_t>(n) * n), inv(static_cast<size_t>(n) * n, 0.0);
  for (size_t i = 0; i < a.size(); ++i) a[i] = static_cast<double>(w.data[i]);
  for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;

  double logdet = 0.0;
  int sign_flips = 0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::fabs(a[static_cast<size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(a[static_cast<size_t>(r) * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-300)
      throw DegeneracyError("mat_logabsdet: matrix is singular");
    if (pivot != col) {
      for (int k = 0; k < n; ++k) {
        std::swap(a[static_cast<size_t>(pivot) * n + k], a[static_cast<size_t>(col) * n + k]);
        std::swap(inv[static_cast<size_t>(pivot) * n + k], inv[static_cast<size_t>(col) * n + k]);
      }
      ++sign_flips;
    }
    double p = a[static_cast<size_t>(col) * n + col];
    logdet += std::log(std::fabs(p));
    double pinv = 1.0 / p;
    for (int k = 0; k < n; ++k) {
      a[static_cast<size_t>(col) * n + k] *= pinv;
      inv[static_cast<size_t>(col) * n + k] *= pinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[static_cast<size_t>(r) * n + col];
      if (f == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        a[static_cast<size_t>(r) * n + k] -= f * a[static_cast<size_t>(col) * n + k];
        inv[static_cast<size_t>(r) * n + k] -= f * inv[static_cast<size_t>(col) * n + k];
      }
    }
  }
  (void)sign_flips;  // |det| only
  if (logdet < std::log(1e-12))
    throw DegeneracyError("mat_logabsdet: |det| below 1e-12");
  if (inverse) {
    inverse->dims = {n, n};
    inverse->data.resize(static_cast<size_t>(n) * n);
    for (size_t i = 0; i < inv.size(); ++i)
      inverse->data[i] = static_cast<S>(inv[i]);
  }
  return logdet;
}

template <typename S>
typename Tape<S>::Id Tape<S>::input(const Tensor<S>& t) {
  Node n;
  n.op = Op::kLeaf;
  n.value = t;
  n.requires_grad = t.requires_grad;
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::constant(Tensor<S> t) {
  Node n;
  n.op = Op::kLeaf;
  t.requires_grad = false;
  n.value = std::move(t);
  n.requires_grad = false;
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::binary_same_shape(Op op, const char* name, Id a, Id b) {
  const Tensor<S>& ta = at(a).value;
  const Tensor<S>& tb = at(b).value;
  if (!ta.same_shape(tb))
    throw ShapeError(std::string(name) + ": shape mismatch " + ta.shape() + " vs " +
                     tb.shape());
  Node n;
  n.op = op;
  n.in = {a, b, -1};
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.value.dims = ta.dims;
  n.value.data.resize(ta.data.size());
  const S* pa = ta.data.data();
  const S* pb = tb.data.data();
  S* po = n.value.data.data();
  const size_t len = ta.data.size();
  switch (op) {
    case Op::kAdd:
      for (size_t i = 0; i < len; ++i) po[i] = pa[i] + pb[i];
      break;
    case Op::kSub:
      for (size_t i = 0; i < len; ++i) po[i] = pa[i] - pb[i];
      break;
    case Op::kMul:
      for (size_t i = 0; i < len; ++i) po[i] = pa[i] * pb[i];
      break;
    default:
      throw Error("tape: bad binary op");
  }
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::add(Id a, Id b) {
  return binary_same_shape(Op::kAdd, "add", a, b);
}
template <typename S>
typename Tape<S>::Id Tape<S>::sub(Id a, Id b) {
  return binary_same_shape(Op::kSub, "sub", a, b);
}
template <typename S>
typename Tape<S>::Id Tape<S>::mul(Id a, Id b) {
  return binary_same_shape(Op::kMul, "mul", a, b);
}

template <typename S>
typename Tape<S>::Id Tape<S>::unary(Op op, Id a, S scalar) {
  const Tensor<S>& ta = at(a).value;
  Node n;
  n.op = op;
  n.in = {a, -1, -1};
  n.scalar = scalar;
  n.requires_grad = at(a).requires_grad;
  n.value.dims = ta.dims;
  n.value.data.resize(ta.data.size());
  const S* pa = ta.data.data();
  S* po = n.value.data.data();
  const size_t len = ta.data.size();
  switch (op) {
    case Op::kScalarMul:
      for (size_t i = 0; i < len; ++i) po[i] = pa[i] * scalar;
      break;
    case Op::kAddScalar:
      for (size_t i = 0; i < len; ++i) po[i] = pa[i] + scalar;
      break;
    case Op::kRelu:
      for (size_t i = 0; i < len; ++i) po[i] = pa[i] > S(0) ? pa[i] : S(0);
      break;
    case Op::kTanh:
      for (size_t i = 0; i < len; ++i) po[i] = std::tanh(pa[i]);
      break;
    case Op::kExp:
      for (size_t i = 0; i < len; ++i) po[i] = std::exp(pa[i]);
      break;
    case Op::kLog:
      for (size_t i = 0; i < len; ++i) po[i] = std::log(pa[i]);
      break;
    default:
      throw Error("tape: bad unary op");
  }
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::scalar_mul(Id a, S c) {
  return unary(Op::kScalarMul, a, c);
}
template <typename S>
typename Tape<S>::Id Tape<S>::add_scalar(Id a, S c) {
  return unary(Op::kAddScalar, a, c);
}
template <typename S>
typename Tape<S>::Id Tape<S>::relu(Id a) {
  return unary(Op::kRelu, a);
}
template <typename S>
typename Tape<S>::Id Tape<S>::tanh(Id a) {
  return unary(Op::kTanh, a);
}
template <typename S>
typename Tape<S>::Id Tape<S>::exp(Id a) {
  return unary(Op::kExp, a);
}
template <typename S>
typename Tape<S>::Id Tape<S>::log(Id a) {
  return unary(Op::kLog, a);
}

template <typename S>
typename Tape<S>::Id Tape<S>::matmul(Id a, Id b) {
  const Tensor<S>& ta = at(a).value;
  const Tensor<S>& tb = at(b).value;
  if (ta.dims.size() != 2 || tb.dims.size() != 2 || ta.dims[1] != tb.dims[0])
    throw ShapeError("matmul: incompatible shapes " + ta.shape() + " vs " + tb.shape());
  Node n;
  n.op = Op::kMatMul;
  n.in = {a, b, -1};
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.value.dims = {ta.dims[0], tb.dims[1]};
  n.value.data.resize(static_cast<size_t>(ta.dims[0]) * tb.dims[1]);
  CMapM<S> ma(ta.data.data(), ta.dims[0], ta.dims[1]);
  CMapM<S> mb(tb.data.data(), tb.dims[0], tb.dims[1]);
  MapM<S> mo(n.value.data.data(), ta.dims[0], tb.dims[1]);
  mo.noalias() = ma * mb;
  return push(std::move(n));
}

template <typename S>
void Tape<S>::require_4d(const char* opname, const Tensor<S>& t) const {
  if (t.dims.size() != 4)
    throw ShapeError(std::string(opname) + ": want a 4-D (N,C,H,W) tensor, got " +
                     t.shape());
}

template <typename S>
typename Tape<S>::Id Tape<S>::conv2d(Id x, Id w, Id b) {
  const Tensor<S>& tx = at(x).value;
  const Tensor<S>& tw = at(w).value;
  const Tensor<S>& tb = at(b).value;
  require_4d("conv2d", tx);
  if (tw.dims.size() != 4)
    throw ShapeError("conv2d: weight must be 4-D (O,C,kh,kw), got " + tw.shape());
  const int batch = tx.dims[0], c = tx.dims[1], h = tx.dims[2], wd = tx.dims[3];
  const int out_ch = tw.dims[0], kh = tw.dims[2], kw = tw.dims[3];
  if (tw.dims[1] != c)
    throw ShapeError("conv2d: input " + tx.shape() + " vs weight " + tw.shape());
  if (kh % 2 == 0 || kw % 2 == 0)
    throw ShapeError("conv2d: same padding requires odd kernel, got " + tw.shape());
  if (tb.dims.size() != 1 || tb.dims[0] != out_ch)
    throw ShapeError("conv2d: bias " + tb.shape() + " vs weight " + tw.shape());

  Node n;
  n.op = Op::kConv2d;
  n.in = {x, w, b};
  n.requires_grad =
      at(x).requires_grad || at(w).requires_grad || at(b).requires_grad;
  n.value.dims = {batch, out_ch, h, wd};
  n.value.data.resize(static_cast<size_t>(batch) * out_ch * h * wd);

  const size_t hw = static_cast<size_t>(h) * wd;
  const size_t krows = static_cast<size_t>(c) * kh * kw;
  const size_t x_stride = static_cast<size_t>(c) * hw;
  const size_t y_stride = static_cast<size_t>(out_ch) * hw;
  CMapM<S> wmat(tw.data.data(), out_ch, static_cast<int>(krows));

#pragma omp parallel for schedule(static)
  for (int nb = 0; nb < batch; ++nb) {
    const S* xs = tx.data.data() + static_cast<size_t>(nb) * x_stride;
    S* ys = n.value.data.data() + static_cast<size_t>(nb) * y_stride;
    MapM<S> ymat(ys, out_ch, static_cast<int>(hw));
    if (kh == 1 && kw == 1) {
      CMapM<S> colmat(xs, static_cast<int>(krows), static_cast<int>(hw));
      ymat.noalias() = wmat * colmat;
    } else {
      std::vector<S> col(krows * hw);
      im2col(xs, c, h, wd, kh, kw, col.data());
      CMapM<S> colmat(col.data(), static_cast<int>(krows), static_cast<int>(hw));
      ymat.noalias() = wmat * colmat;
    }
    for (int o = 0; o < out_ch; ++o) {
      const S bias = tb.data[static_cast<size_t>(o)];
      S* row = ys + static_cast<size_t>(o) * hw;
      for (size_t i = 0; i < hw; ++i) row[i] += bias;
    }
  }
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::sum(Id a) {
  const Tensor<S>& ta = at(a).value;
  Node n;
  n.op = Op::kSum;
  n.in = {a, -1, -1};
  n.requires_grad = at(a).requires_grad;
  double acc = 0.0;
  for (S v : ta.data) acc += static_cast<double>(v);
  n.value = Tensor<S>::scalar(static_cast<S>(acc));
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::mean(Id a) {
  const Tensor<S>& ta = at(a).value;
  if (ta.numel() == 0) throw ShapeError("mean: empty tensor");
  Node n;
  n.op = Op::kMean;
  n.in = {a, -1, -1};
  n.requires_grad = at(a).requires_grad;
  double acc = 0.0;
  for (S v : ta.data) acc += static_cast<double>(v);
  n.value = Tensor<S>::scalar(static_cast<S>(acc / static_cast<double>(ta.numel())));
  return push(std::move(n));
}

template <typename S>
std::pair<typename Tape<S>::Id, typename Tape<S>::Id> Tape<S>::channel_split(Id x) {
  const Tensor<S>& tx = at(x).value;
  require_4d("channel_split", tx);
  if (tx.dims[1] % 2 != 0)
    throw ShapeError("channel_split: odd channel count in " + tx.shape());
  const int batch = tx.dims[0], c = tx.dims[1], h = tx.dims[2], w = tx.dims[3];
  const int hc = c / 2;
  const size_t hw = static_cast<size_t>(h) * w;
  Id out[2];
  for (int part = 0; part < 2; ++part) {
    Node n;
    n.op = part == 0 ? Op::kSplitLo : Op::kSplitHi;
    n.in = {x, -1, -1};
    n.requires_grad = at(x).requires_grad;
    n.value.dims = {batch, hc, h, w};
    n.value.data.resize(static_cast<size_t>(batch) * hc * hw);
    for (int nb = 0; nb < batch; ++nb) {
      const S* src = tx.data.data() +
                     (static_cast<size_t>(nb) * c + static_cast<size_t>(part) * hc) * hw;
      S* dst = n.value.data.data() + static_cast<size_t>(nb) * hc * hw;
      std::memcpy(dst, src, sizeof(S) * hc * hw);
    }
    out[part] = push(std::move(n));
  }
  return {out[0], out[1]};
}

template <typename S>
typename Tape<S>::Id Tape<S>::channel_concat(Id a, Id b) {
  const Tensor<S>& ta = at(a).value;
  const Tensor<S>& tb = at(b).value;
  require_4d("channel_concat", ta);
  require_4d("channel_concat", tb);
  if (ta.dims[0] != tb.dims[0] || ta.dims[2] != tb.dims[2] || ta.dims[3] != tb.dims[3])
    throw ShapeError("channel_concat: shape mismatch " + ta.shape() + " vs " +
                     tb.shape());
  const int batch = ta.dims[0], ca = ta.dims[1], cb = tb.dims[1];
  const size_t hw = static_cast<size_t>(ta.dims[2]) * ta.dims[3];
  Node n;
  n.op = Op::kConcat;
  n.in = {a, b, -1};
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.value.dims = {batch, ca + cb, ta.dims[2], ta.dims[3]};
  n.value.data.resize(static_cast<size_t>(batch) * (ca + cb) * hw);
  for (int nb = 0; nb < batch; ++nb) {
    S* dst = n.value.data.data() + static_cast<size_t>(nb) * (ca + cb) * hw;
    std::memcpy(dst, ta.data.data() + static_cast<size_t>(nb) * ca * hw,
                sizeof(S) * ca * hw);
    std::memcpy(dst + static_cast<size_t>(ca) * hw,
                tb.data.data() + static_cast<size_t>(nb) * cb * hw, sizeof(S) * cb * hw);
  }
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::channel_add(Id x, Id bias) {
  const Tensor<S>& tx = at(x).value;
  const Tensor<S>& tb = at(bias).value;
  require_4d("channel_add", tx);
  if (tb.dims.size() != 1 || tb.dims[0] != tx.dims[1])
    throw ShapeError("channel_add: bias " + tb.shape() + " vs input " + tx.shape());
  Node n;
  n.op = Op::kChannelAdd;
  n.in = {x, bias, -1};
  n.requires_grad = at(x).requires_grad || at(bias).requires_grad;
  n.value.dims = tx.dims;
  n.value.data.resize(tx.data.size());
  const int batch = tx.dims[0], c = tx.dims[1];
  const size_t hw = static_cast<size_t>(tx.dims[2]) * tx.dims[3];
  for (int nb = 0; nb < batch; ++nb)
    for (int ci = 0; ci < c; ++ci) {
      const S* src = tx.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
      S* dst = n.value.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
      const S bv = tb.data[static_cast<size_t>(ci)];
      for (size_t i = 0; i < hw; ++i) dst[i] = src[i] + bv;
    }
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::channel_scale(Id x, Id scale) {
  const Tensor<S>& tx = at(x).value;
  const Tensor<S>& ts = at(scale).value;
  require_4d("channel_scale", tx);
  if (ts.dims.size() != 1 || ts.dims[0] != tx.dims[1])
    throw ShapeError("channel_scale: scale " + ts.shape() + " vs input " + tx.shape());
  Node n;
  n.op = Op::kChannelScale;
  n.in = {x, scale, -1};
  n.requires_grad = at(x).requires_grad || at(scale).requires_grad;
  n.value.dims = tx.dims;
  n.value.data.resize(tx.data.size());
  const int batch = tx.dims[0], c = tx.dims[1];
  const size_t hw = static_cast<size_t>(tx.dims[2]) * tx.dims[3];
  for (int nb = 0; nb < batch; ++nb)
    for (int ci = 0; ci < c; ++ci) {
      const S* src = tx.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
      S* dst = n.value.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
      const S sv = ts.data[static_cast<size_t>(ci)];
      for (size_t i = 0; i < hw; ++i) dst[i] = src[i] * sv;
    }
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::reshape(Id a, std::vector<int> dims) {
  const Tensor<S>& ta = at(a).value;
  if (Tensor<S>::numel_of(dims) != ta.numel())
    throw ShapeError("reshape: cannot view " + ta.shape() + " as " +
                     Tensor<S>::shape_str(dims));
  Node n;
  n.op = Op::kReshape;
  n.in = {a, -1, -1};
  n.requires_grad = at(a).requires_grad;
  n.value.dims = std::move(dims);
  n.value.data = ta.data;
  return push(std::move(n));
}

namespace {

// y[n, 4c + 2di + dj, i, j] = x[n, c, 2i+di, 2j+dj]; dir=+1 squeezes,
// dir=-1 scatters (used for unsqueeze and the backward passes).
template <typename S>
void squeeze_copy(const S* x, S* y, int batch, int c, int h, int w, bool forward) {
  const int oh = h / 2, ow = w / 2;
  for (int nb = 0; nb < batch; ++nb)
    for (int ci = 0; ci < c; ++ci)
      for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj) {
          const size_t oc = static_cast<size_t>(ci) * 4 + 2 * di + dj;
          for (int i = 0; i < oh; ++i) {
            size_t src = ((static_cast<size_t>(nb) * c + ci) * h + (2 * i + di)) * w +
                         dj;
            size_t dst = ((static_cast<size_t>(nb) * c * 4 + oc) * oh + i) * ow;
            if (forward)
              for (int j = 0; j < ow; ++j) y[dst + j] = x[src + 2 * j];
            else
              for (int j = 0; j < ow; ++j) y[src + 2 * j] = x[dst + j];
          }
        }
}

}  // namespace

template <typename S>
typename Tape<S>::Id Tape<S>::squeeze2(Id x) {
  const Tensor<S>& tx = at(x).value;
  require_4d("squeeze", tx);
  if (tx.dims[2] % 2 != 0 || tx.dims[3] % 2 != 0)
    throw ShapeError("squeeze: height and width must be even, got " + tx.shape());
  Node n;
  n.op = Op::kSqueeze2;
  n.in = {x, -1, -1};
  n.requires_grad = at(x).requires_grad;
  n.value.dims = {tx.dims[0], tx.dims[1] * 4, tx.dims[2] / 2, tx.dims[3] / 2};
  n.value.data.resize(tx.data.size());
  squeeze_copy(tx.data.data(), n.value.data.data(), tx.dims[0], tx.dims[1],
               tx.dims[2], tx.dims[3], true);
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::unsqueeze2(Id x) {
  const Tensor<S>& tx = at(x).value;
  require_4d("unsqueeze", tx);
  if (tx.dims[1] % 4 != 0)
    throw ShapeError("unsqueeze: channels must be divisible by 4, got " + tx.shape());
  Node n;
  n.op = Op::kUnsqueeze2;
  n.in = {x, -1, -1};
  n.requires_grad = at(x).requires_grad;
  n.value.dims = {tx.dims[0], tx.dims[1] / 4, tx.dims[2] * 2, tx.dims[3] * 2};
  n.value.data.resize(tx.data.size());
  squeeze_copy(tx.data.data(), n.value.data.data(), tx.dims[0], tx.dims[1] / 4,
               tx.dims[2] * 2, tx.dims[3] * 2, false);
  return push(std::move(n));
}

template <typename S>
typename Tape<S>::Id Tape<S>::mat_logabsdet(Id w) {
  const Tensor<S>& tw = at(w).value;
  Node n;
  n.op = Op::kLogAbsDet;
  n.in = {w, -1, -1};
  n.requires_grad = at(w).requires_grad;
  Tensor<S> inv;
  double ld = mat_inverse_logabsdet(tw, &inv);
  n.value = Tensor<S>::scalar(static_cast<S>(ld));
  n.aux = std::move(inv.data);  // row-major inverse, used in backward
  return push(std::move(n));
}

template <typename S>
bool Tape<S>::has_grad(Id id) const {
  const Node& n = at(id);
  return n.requires_grad && !n.grad.data.empty();
}

template <typename S>
const Tensor<S>& Tape<S>::grad(Id id) const {
  const Node& n = at(id);
  if (!n.requires_grad)
    throw ContractError("tape: node " + std::to_string(id) +
                        " does not require grad; absent from gradient map");
  if (n.grad.data.empty())
    throw ContractError("tape: no gradient for node " + std::to_string(id) +
                        "; run backward() first");
  return n.grad;
}

template <typename S>
void Tape<S>::accumulate(Id target, const Tensor<S>& g) {
  Node& n = at(target);
  if (!n.requires_grad) return;
  if (n.grad.data.empty()) {
    n.grad.dims = n.value.dims;
    n.grad.data.assign(n.value.data.size(), S(0));
  }
  for (size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

template <typename S>
void Tape<S>::backward(Id out) {
  Node& root = at(out);
  if (root.value.numel() != 1)
    throw ContractError("backward: output must be scalar, got shape " +
                        root.value.shape());
  if (!root.requires_grad)
    throw ContractError("backward: output does not depend on any trainable input");
  for (Node& n : nodes_) n.grad.data.clear();
  root.grad.dims = root.value.dims;
  root.grad.data.assign(1, S(1));
  for (Id id = out; id >= 0; --id) backward_node(id);
}

template <typename S>
void Tape<S>::backward_node(Id id) {
  Node& n = at(id);
  if (!n.requires_grad || n.grad.data.empty() || n.op == Op::kLeaf) return;
  const Tensor<S>& gy = n.grad;
  const size_t len = gy.data.size();

  auto ensure = [&](Id target) -> Tensor<S>* {
    Node& t = at(target);
    if (!t.requires_grad) return nullptr;
    if (t.grad.data.empty()) {
      t.grad.dims = t.value.dims;
      t.grad.data.assign(t.value.data.size(), S(0));
    }
    return &t.grad;
  };

  switch (n.op) {
    case Op::kAdd: {
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i];
      if (Tensor<S>* gb = ensure(n.in[1]))
        for (size_t i = 0; i < len; ++i) gb->data[i] += gy.data[i];
      break;
    }
    case Op::kSub: {
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i];
      if (Tensor<S>* gb = ensure(n.in[1]))
        for (size_t i = 0; i < len; ++i) gb->data[i] -= gy.data[i];
      break;
    }
    case Op::kMul: {
      const Tensor<S>& va = at(n.in[0]).value;
      const Tensor<S>& vb = at(n.in[1]).value;
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i] * vb.data[i];
      if (Tensor<S>* gb = ensure(n.in[1]))
        for (size_t i = 0; i < len; ++i) gb->data[i] += gy.data[i] * va.data[i];
      break;
    }
    case Op::kScalarMul: {
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i] * n.scalar;
      break;
    }
    case Op::kAddScalar:
    case Op::kReshape: {
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i];
      break;
    }
    case Op::kRelu: {
      const Tensor<S>& vx = at(n.in[0]).value;
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i)
          if (vx.data[i] > S(0)) ga->data[i] += gy.data[i];
      break;
    }
    case Op::kTanh: {
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i)
          ga->data[i] += gy.data[i] * (S(1) - n.value.data[i] * n.value.data[i]);
      break;
    }
    case Op::kExp: {
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i] * n.value.data[i];
      break;
    }
    case Op::kLog: {
      const Tensor<S>& vx = at(n.in[0]).value;
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) ga->data[i] += gy.data[i] / vx.data[i];
      break;
    }
    case Op::kMatMul: {
      const Tensor<S>& va = at(n.in[0]).value;
      const Tensor<S>& vb = at(n.in[1]).value;
      const int m = va.dims[0], k = va.dims[1], c = vb.dims[1];
      CMapM<S> mg(gy.data.data(), m, c);
      if (Tensor<S>* ga = ensure(n.in[0])) {
        CMapM<S> mb(vb.data.data(), k, c);
        MapM<S> mga(ga->data.data(), m, k);
        mga.noalias() += mg * mb.transpose();
      }
      if (Tensor<S>* gb = ensure(n.in[1])) {
        CMapM<S> ma(va.data.data(), m, k);
        MapM<S> mgb(gb->data.data(), k, c);
        mgb.noalias() += ma.transpose() * mg;
      }
      break;
    }
    case Op::kConv2d: {
      const Tensor<S>& vx = at(n.in[0]).value;
      const Tensor<S>& vw = at(n.in[1]).value;
      const int batch = vx.dims[0], c = vx.dims[1], h = vx.dims[2], w = vx.dims[3];
      const int out_ch = vw.dims[0], kh = vw.dims[2], kw = vw.dims[3];
      const size_t hw = static_cast<size_t>(h) * w;
      const size_t krows = static_cast<size_t>(c) * kh * kw;
      const size_t x_stride = static_cast<size_t>(c) * hw;
      const size_t y_stride = static_cast<size_t>(out_ch) * hw;
      Tensor<S>* gx = ensure(n.in[0]);
      Tensor<S>* gw = ensure(n.in[1]);
      Tensor<S>* gb = ensure(n.in[2]);
      if (gx) {
        CMapM<S> wmat(vw.data.data(), out_ch, static_cast<int>(krows));
        // Per-sample input grads are independent of each other.
#pragma omp parallel for schedule(static)
        for (int nb = 0; nb < batch; ++nb) {
          CMapM<S> gymat(gy.data.data() + static_cast<size_t>(nb) * y_stride, out_ch,
                         static_cast<int>(hw));
          S* dst = gx->data.data() + static_cast<size_t>(nb) * x_stride;
          if (kh == 1 && kw == 1) {
            MapM<S> gxm(dst, static_cast<int>(krows), static_cast<int>(hw));
            gxm.noalias() += wmat.transpose() * gymat;
          } else {
            std::vector<S> colg(krows * hw);
            MapM<S> colgm(colg.data(), static_cast<int>(krows), static_cast<int>(hw));
            colgm.noalias() = wmat.transpose() * gymat;
            col2im_add(colg.data(), c, h, w, kh, kw, dst);
          }
        }
      }
      if (gw) {
        // Serial over samples: the accumulation order into gw is fixed.
        MapM<S> gwm(gw->data.data(), out_ch, static_cast<int>(krows));
        std::vector<S> col;
        for (int nb = 0; nb < batch; ++nb) {
          const S* xs = vx.data.data() + static_cast<size_t>(nb) * x_stride;
          CMapM<S> gymat(gy.data.data() + static_cast<size_t>(nb) * y_stride, out_ch,
                         static_cast<int>(hw));
          if (kh == 1 && kw == 1) {
            CMapM<S> colmat(xs, static_cast<int>(krows), static_cast<int>(hw));
            gwm.noalias() += gymat * colmat.transpose();
          } else {
            col.resize(krows * hw);
            im2col(xs, c, h, w, kh, kw, col.data());
            CMapM<S> colmat(col.data(), static_cast<int>(krows), static_cast<int>(hw));
            gwm.noalias() += gymat * colmat.transpose();
          }
        }
      }
      if (gb) {
        for (int nb = 0; nb < batch; ++nb)
          for (int o = 0; o < out_ch; ++o) {
            const S* row = gy.data.data() + static_cast<size_t>(nb) * y_stride +
                           static_cast<size_t>(o) * hw;
            double acc = 0.0;
            for (size_t i = 0; i < hw; ++i) acc += static_cast<double>(row[i]);
            gb->data[static_cast<size_t>(o)] += static_cast<S>(acc);
          }
      }
      break;
    }
    case Op::kSum: {
      const S g = gy.data[0];
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (size_t i = 0; i < ga->data.size(); ++i) ga->data[i] += g;
      break;
    }
    case Op::kMean: {
      if (Tensor<S>* ga = ensure(n.in[0])) {
        const S g = gy.data[0] / static_cast<S>(ga->data.size());
        for (size_t i = 0; i < ga->data.size(); ++i) ga->data[i] += g;
      }
      break;
    }
    case Op::kSplitLo:
    case Op::kSplitHi: {
      const Tensor<S>& vx = at(n.in[0]).value;
      const int batch = vx.dims[0], c = vx.dims[1];
      const int hc = c / 2;
      const size_t hw = static_cast<size_t>(vx.dims[2]) * vx.dims[3];
      const int part = n.op == Op::kSplitLo ? 0 : 1;
      if (Tensor<S>* ga = ensure(n.in[0])) {
        for (int nb = 0; nb < batch; ++nb) {
          S* dst = ga->data.data() +
                   (static_cast<size_t>(nb) * c + static_cast<size_t>(part) * hc) * hw;
          const S* src = gy.data.data() + static_cast<size_t>(nb) * hc * hw;
          for (size_t i = 0; i < static_cast<size_t>(hc) * hw; ++i) dst[i] += src[i];
        }
      }
      break;
    }
    case Op::kConcat: {
      const Tensor<S>& va = at(n.in[0]).value;
      const Tensor<S>& vb = at(n.in[1]).value;
      const int batch = va.dims[0], ca = va.dims[1], cb = vb.dims[1];
      const size_t hw = static_cast<size_t>(va.dims[2]) * va.dims[3];
      if (Tensor<S>* ga = ensure(n.in[0]))
        for (int nb = 0; nb < batch; ++nb) {
          const S* src = gy.data.data() + static_cast<size_t>(nb) * (ca + cb) * hw;
          S* dst = ga->data.data() + static_cast<size_t>(nb) * ca * hw;
          for (size_t i = 0; i < static_cast<size_t>(ca) * hw; ++i) dst[i] += src[i];
        }
      if (Tensor<S>* gb = ensure(n.in[1]))
        for (int nb = 0; nb < batch; ++nb) {
          const S* src = gy.data.data() + static_cast<size_t>(nb) * (ca + cb) * hw +
                         static_cast<size_t>(ca) * hw;
          S* dst = gb->data.data() + static_cast<size_t>(nb) * cb * hw;
          for (size_t i = 0; i < static_cast<size_t>(cb) * hw; ++i) dst[i] += src[i];
        }
      break;
    }
    case Op::kChannelAdd: {
      const Tensor<S>& vx = at(n.in[0]).value;
      const int batch = vx.dims[0], c = vx.dims[1];
      const size_t hw = static_cast<size_t>(vx.dims[2]) * vx.dims[3];
      if (Tensor<S>* gx = ensure(n.in[0]))
        for (size_t i = 0; i < len; ++i) gx->data[i] += gy.data[i];
      if (Tensor<S>* gbias = ensure(n.in[1]))
        for (int ci = 0; ci < c; ++ci) {
          double acc = 0.0;
          for (int nb = 0; nb < batch; ++nb) {
            const S* row = gy.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
            for (size_t i = 0; i < hw; ++i) acc += static_cast<double>(row[i]);
          }
          gbias->data[static_cast<size_t>(ci)] += static_cast<S>(acc);
        }
      break;
    }
    case Op::kChannelScale: {
      const Tensor<S>& vx = at(n.in[0]).value;
      const Tensor<S>& vs = at(n.in[1]).value;
      const int batch = vx.dims[0], c = vx.dims[1];
      const size_t hw = static_cast<size_t>(vx.dims[2]) * vx.dims[3];
      if (Tensor<S>* gx = ensure(n.in[0]))
        for (int nb = 0; nb < batch; ++nb)
          for (int ci = 0; ci < c; ++ci) {
            const S sv = vs.data[static_cast<size_t>(ci)];
            const size_t off = (static_cast<size_t>(nb) * c + ci) * hw;
            for (size_t i = 0; i < hw; ++i)
              gx->data[off + i] += gy.data[off + i] * sv;
          }
      if (Tensor<S>* gs = ensure(n.in[1]))
        for (int ci = 0; ci < c; ++ci) {
          double acc = 0.0;
          for (int nb = 0; nb < batch; ++nb) {
            const size_t off = (static_cast<size_t>(nb) * c + ci) * hw;
            for (size_t i = 0; i < hw; ++i)
              acc += static_cast<double>(gy.data[off + i]) * vx.data[off + i];
          }
          gs->data[static_cast<size_t>(ci)] += static_cast<S>(acc);
        }
      break;
    }
    case Op::kSqueeze2: {
      const Tensor<S>& vx = at(n.in[0]).value;
      if (Tensor<S>* gx = ensure(n.in[0])) {
        std::vector<S> scratch(len);
        squeeze_copy(gy.data.data(), scratch.data(), vx.dims[0], vx.dims[1],
                     vx.dims[2], vx.dims[3], false);
        for (size_t i = 0; i < len; ++i) gx->data[i] += scratch[i];
      }
      break;
    }
    case Op::kUnsqueeze2: {
      const Tensor<S>& vy = n.value;
      if (Tensor<S>* gx = ensure(n.in[0])) {
        std::vector<S> scratch(len);
        squeeze_copy(gy.data.data(), scratch.data(), vy.dims[0], vy.dims[1],
                     vy.dims[2], vy.dims[3], true);
        for (size_t i = 0; i < len; ++i) gx->data[i] += scratch[i];
      }
      break;
    }
    case Op::kLogAbsDet: {
      const Tensor<S>& vw = at(n.in[0]).value;
      const int dim = vw.dims[0];
      if (Tensor<S>* gw = ensure(n.in[0])) {
        const S g = gy.data[0];
        // d ln|det W| / dW = (W^-1)^T; aux holds W^-1 row-major.
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j)
            gw->data[static_cast<size_t>(i) * dim + j] +=
                g * n.aux[static_cast<size_t>(j) * dim + i];
      }
      break;
    }
    case Op::kLeaf:
      break;
  }
}

template class Tape<float>;
template class Tape<double>;
template double mat_inverse_logabsdet<float>(const Tensor<float>&, Tensor<float>*);
template double mat_inverse_logabsdet<double>(const Tensor<double>&, Tensor<double>*);

}  // namespace nfad
