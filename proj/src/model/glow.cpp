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

#include "model/glow.hpp"

#include <cmath>

namespace nfad {

void GlowConfig::validate() const {
  if (n_blocks < 1) throw ConfigError("glow: n_blocks must be >= 1");
  if (k_steps < 1) throw ConfigError("glow: k_steps must be >= 1");
  if (hidden_channels < 2 || hidden_channels % 2 != 0)
    throw ConfigError("glow: hidden_channels must be even and >= 2");
  int div = 1 << n_blocks;
  if (in_height % div != 0 || in_width % div != 0)
    throw ConfigError("glow: input " + std::to_string(in_height) + "x" +
                      std::to_string(in_width) + " not divisible by 2^" +
                      std::to_string(n_blocks));
  for (int b = 0; b < n_blocks; ++b)
    if (block_channels(b) % 2 != 0)
      throw ConfigError("glow: odd channel count in block " + std::to_string(b));
}

int GlowConfig::block_channels(int b) const {
  int c = in_channels;
  for (int i = 0; i <= b; ++i) {
    c *= 4;
    if (i < b) c /= 2;  // half the channels pass to the next block
  }
  return c;
}

int GlowConfig::zd_channels() const { return block_channels(n_blocks - 1) / 2; }

namespace {

// Random orthogonal matrix via Gram-Schmidt on a Gaussian draw, with the
// diagonal sign fixed so the result is deterministic in the seed.
template <typename S>
Tensor<S> random_orthogonal(int n, Rng& rng) {
  std::vector<double> a(static_cast<size_t>(n) * n);
  for (double& v : a) v = rng.normal();
  for (int col = 0; col < n; ++col) {
    for (int prev = 0; prev < col; ++prev) {
      double dot = 0.0;
      for (int r = 0; r < n; ++r)
        dot += a[static_cast<size_t>(r) * n + col] * a[static_cast<size_t>(r) * n + prev];
      for (int r = 0; r < n; ++r)
        a[static_cast<size_t>(r) * n + col] -= dot * a[static_cast<size_t>(r) * n + prev];
    }
    double norm = 0.0;
    for (int r = 0; r < n; ++r) {
      double v = a[static_cast<size_t>(r) * n + col];
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-8) throw DegeneracyError("glow: degenerate orthogonal init");
    double sign = a[static_cast<size_t>(col) * n + col] >= 0 ? 1.0 : -1.0;
    for (int r = 0; r < n; ++r)
      a[static_cast<size_t>(r) * n + col] /= norm * sign;
  }
  Tensor<S> w({n, n});
  for (size_t i = 0; i < a.size(); ++i) w.data[i] = static_cast<S>(a[i]);
  return w;
}

template <typename S>
Tensor<S> gaussian_tensor(std::vector<int> dims, double stddev, Rng& rng) {
  Tensor<S> t(std::move(dims));
  for (S& v : t.data) v = static_cast<S>(stddev * rng.normal());
  return t;
}

}  // namespace

template <typename S>
GlowModel<S> GlowModel<S>::init(const GlowConfig& cfg, uint64_t seed) {
  cfg.validate();
  GlowModel<S> model;
  model.cfg = cfg;
  Rng rng(mix_seed(seed, 0x9f0b));
  const double conv_std = 0.05;
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const int c = cfg.block_channels(b);
    const int hid = cfg.hidden_channels;
    std::vector<StepParams> steps;
    for (int k = 0; k < cfg.k_steps; ++k) {
      StepParams s;
      s.actnorm_logs = Tensor<S>::zeros({c});
      s.actnorm_bias = Tensor<S>::zeros({c});
      s.invconv_w = random_orthogonal<S>(c, rng);
      s.conv1_w = gaussian_tensor<S>({hid, c / 2, 3, 3}, conv_std, rng);
      s.conv1_b = Tensor<S>::zeros({hid});
      s.conv2_w = gaussian_tensor<S>({hid, hid, 1, 1}, conv_std, rng);
      s.conv2_b = Tensor<S>::zeros({hid});
      // Zero-initialized last layer: the coupling starts near identity
      // (scale sigmoid(2), shift 0).
      s.conv3_w = Tensor<S>::zeros({c, hid, 3, 3});
      s.conv3_b = Tensor<S>::zeros({c});
      steps.push_back(std::move(s));
    }
    model.blocks.push_back(std::move(steps));
  }
  return model;
}

template <typename S>
std::vector<Tensor<S>*> GlowModel<S>::parameters() {
  std::vector<Tensor<S>*> out;
  for (auto& block : blocks)
    for (StepParams& s : block) {
      out.push_back(&s.actnorm_logs);
      out.push_back(&s.actnorm_bias);
      out.push_back(&s.invconv_w);
      out.push_back(&s.conv1_w);
      out.push_back(&s.conv1_b);
      out.push_back(&s.conv2_w);
      out.push_back(&s.conv2_b);
      out.push_back(&s.conv3_w);
      out.push_back(&s.conv3_b);
    }
  return out;
}

template <typename S>
std::vector<const Tensor<S>*> GlowModel<S>::parameters() const {
  std::vector<const Tensor<S>*> out;
  for (const auto& block : blocks)
    for (const StepParams& s : block) {
      out.push_back(&s.actnorm_logs);
      out.push_back(&s.actnorm_bias);
      out.push_back(&s.invconv_w);
      out.push_back(&s.conv1_w);
      out.push_back(&s.conv1_b);
      out.push_back(&s.conv2_w);
      out.push_back(&s.conv2_b);
      out.push_back(&s.conv3_w);
      out.push_back(&s.conv3_b);
    }
  return out;
}

template <typename S>
std::vector<std::string> GlowModel<S>::parameter_names() const {
  std::vector<std::string> out;
  for (size_t b = 0; b < blocks.size(); ++b)
    for (size_t k = 0; k < blocks[b].size(); ++k) {
      std::string prefix =
          "block" + std::to_string(b) + ".step" + std::to_string(k) + ".";
      out.push_back(prefix + "actnorm.logs");
      out.push_back(prefix + "actnorm.bias");
      out.push_back(prefix + "invconv.w");
      out.push_back(prefix + "conv1.w");
      out.push_back(prefix + "conv1.b");
      out.push_back(prefix + "conv2.w");
      out.push_back(prefix + "conv2.b");
      out.push_back(prefix + "conv3.w");
      out.push_back(prefix + "conv3.b");
    }
  return out;
}

template <typename S>
bool GlowModel<S>::actnorm_ready() const {
  for (const auto& block : blocks)
    for (const StepParams& s : block)
      if (!s.actnorm_initialized) return false;
  return true;
}

template <typename S>
void GlowModel<S>::mark_actnorm_initialized() {
  for (auto& block : blocks)
    for (StepParams& s : block) s.actnorm_initialized = true;
}

template <typename S>
typename Tape<S>::Id GlowModel<S>::step_forward(
    Tape<S>& tape, typename Tape<S>::Id x, StepParams& step, bool train,
    bool init_actnorm, std::vector<typename Tape<S>::Id>& param_ids,
    typename Tape<S>::Id& log_det) {
  using Id = typename Tape<S>::Id;
  const Tensor<S>& xin = tape.val(x);
  const int batch = xin.dims[0], c = xin.dims[1];
  const S area = static_cast<S>(xin.dims[2]) * static_cast<S>(xin.dims[3]);

  if (init_actnorm && !step.actnorm_initialized) {
    // Data-dependent init: zero mean, unit variance per channel on this batch.
    const size_t hw = static_cast<size_t>(xin.dims[2]) * xin.dims[3];
    for (int ci = 0; ci < c; ++ci) {
      double sum = 0.0, sumsq = 0.0;
      for (int nb = 0; nb < batch; ++nb) {
        const S* row = xin.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
        for (size_t i = 0; i < hw; ++i) {
          sum += row[i];
          sumsq += static_cast<double>(row[i]) * row[i];
        }
      }
      double count = static_cast<double>(batch) * static_cast<double>(hw);
      double mean = sum / count;
      double var = std::max(sumsq / count - mean * mean, 0.0);
      double stddev = std::sqrt(var) + 1e-6;
      step.actnorm_logs.data[static_cast<size_t>(ci)] =
          static_cast<S>(-std::log(stddev));
      step.actnorm_bias.data[static_cast<size_t>(ci)] = static_cast<S>(-mean);
    }
    step.actnorm_initialized = true;
  }
  for (S v : step.actnorm_logs.data)
    if (!std::isfinite(static_cast<double>(v)) || std::exp(static_cast<double>(v)) == 0.0)
      throw DegeneracyError("actnorm: scale underflowed to zero");

  auto reg = [&](Tensor<S>& p) -> Id {
    p.requires_grad = train;
    Id id = tape.input(p);
    param_ids.push_back(id);
    return id;
  };
  auto add_logdet = [&](Id term) {
    log_det = log_det < 0 ? term : tape.add(log_det, term);
  };

  // actnorm: y = exp(logs) . (x + bias), logdet h*w*sum(logs) per sample
  Id logs = reg(step.actnorm_logs);
  Id bias = reg(step.actnorm_bias);
  Id y = tape.channel_scale(tape.channel_add(x, bias), tape.exp(logs));
  add_logdet(tape.scalar_mul(tape.sum(logs), area * static_cast<S>(batch)));

  // invertible 1x1 convolution
  Id w = reg(step.invconv_w);
  Tensor<S> zero_bias({c});
  y = tape.conv2d(y, tape.reshape(w, {c, c, 1, 1}), tape.constant(zero_bias));
  add_logdet(tape.scalar_mul(tape.mat_logabsdet(w), area * static_cast<S>(batch)));

  // affine coupling: first half unchanged, CNN(x_a) -> (raw scale, shift)
  auto [xa, xb] = tape.channel_split(y);
  Id w1 = reg(step.conv1_w), b1 = reg(step.conv1_b);
  Id w2 = reg(step.conv2_w), b2 = reg(step.conv2_b);
  Id w3 = reg(step.conv3_w), b3 = reg(step.conv3_b);
  Id h = tape.relu(tape.conv2d(xa, w1, b1));
  h = tape.relu(tape.conv2d(h, w2, b2));
  h = tape.conv2d(h, w3, b3);
  auto [raw, t] = tape.channel_split(h);
  Id s = sigmoid_node(tape, tape.add_scalar(raw, S(2)));
  Id yb = tape.add(tape.mul(s, xb), t);
  add_logdet(tape.sum(tape.log(s)));
  return tape.channel_concat(xa, yb);
}

template <typename S>
typename GlowModel<S>::TapeOut GlowModel<S>::forward(Tape<S>& tape,
                                                     typename Tape<S>::Id x,
                                                     bool train, bool init_actnorm) {
  using Id = typename Tape<S>::Id;
  const Tensor<S>& xin = tape.val(x);
  if (xin.dims.size() != 4 || xin.dims[1] != cfg.in_channels ||
      xin.dims[2] != cfg.in_height || xin.dims[3] != cfg.in_width)
    throw ShapeError("glow: input " + xin.shape() + " does not match model (" +
                     std::to_string(cfg.in_channels) + "," +
                     std::to_string(cfg.in_height) + "," +
                     std::to_string(cfg.in_width) + ")");
  if (!init_actnorm && !actnorm_ready())
    throw ContractError("glow: actnorm not initialized; run an init batch first");

  TapeOut out;
  Id cur = x;
  out.log_det = -1;
  for (int b = 0; b < cfg.n_blocks; ++b) {
    cur = tape.squeeze2(cur);
    for (int k = 0; k < cfg.k_steps; ++k)
      cur = step_forward(tape, cur, blocks[static_cast<size_t>(b)][static_cast<size_t>(k)],
                         train, init_actnorm, out.param_ids, out.log_det);
    auto [lo, hi] = tape.channel_split(cur);
    out.zc.push_back(lo);
    if (b < cfg.n_blocks - 1)
      cur = hi;
    else
      out.zd = hi;
  }
  return out;
}

template <typename S>
LatentBundle<S> GlowModel<S>::forward_values(const Tensor<S>& x) {
  if (x.dims.size() != 4 || x.dims[0] != 1)
    throw ShapeError("glow: forward_values expects a single-sample batch, got " +
                     x.shape());
  Tape<S> tape;
  typename Tape<S>::Id xid = tape.constant(x);
  TapeOut out = forward(tape, xid, /*train=*/false);
  LatentBundle<S> bundle;
  for (typename Tape<S>::Id id : out.zc) bundle.zc_parts.push_back(tape.val(id));
  bundle.zd = tape.val(out.zd);
  bundle.log_det = static_cast<double>(tape.val(out.log_det).data[0]);
  return bundle;
}

template <typename S>
Tensor<S> GlowModel<S>::step_inverse(const Tensor<S>& y, const StepParams& step) const {
  const int batch = y.dims[0], c = y.dims[1], h = y.dims[2], w = y.dims[3];
  const size_t hw = static_cast<size_t>(h) * w;
  const int hc = c / 2;

  // coupling inverse: x_b = (y_b - t) / s with (raw, t) = CNN(x_a)
  Tensor<S> xa({batch, hc, h, w}), yb({batch, hc, h, w});
  for (int nb = 0; nb < batch; ++nb) {
    const S* src = y.data.data() + static_cast<size_t>(nb) * c * hw;
    std::copy(src, src + static_cast<size_t>(hc) * hw,
              xa.data.begin() + static_cast<size_t>(nb) * hc * hw);
    std::copy(src + static_cast<size_t>(hc) * hw, src + static_cast<size_t>(c) * hw,
              yb.data.begin() + static_cast<size_t>(nb) * hc * hw);
  }
  Tensor<S> s_val, t_val;
  {
    // CNN evaluated through a scratch tape (values only).
    Tape<S> scratch;
    auto xid = scratch.constant(xa);
    auto hid = scratch.relu(
        scratch.conv2d(xid, scratch.constant(step.conv1_w), scratch.constant(step.conv1_b)));
    hid = scratch.relu(
        scratch.conv2d(hid, scratch.constant(step.conv2_w), scratch.constant(step.conv2_b)));
    hid = scratch.conv2d(hid, scratch.constant(step.conv3_w), scratch.constant(step.conv3_b));
    auto [raw, t] = scratch.channel_split(hid);
    auto s = sigmoid_node(scratch, scratch.add_scalar(raw, S(2)));
    s_val = scratch.val(s);
    t_val = scratch.val(t);
  }
  Tensor<S> x({batch, c, h, w});
  for (int nb = 0; nb < batch; ++nb) {
    S* dst = x.data.data() + static_cast<size_t>(nb) * c * hw;
    const S* pa = xa.data.data() + static_cast<size_t>(nb) * hc * hw;
    std::copy(pa, pa + static_cast<size_t>(hc) * hw, dst);
    const S* pyb = yb.data.data() + static_cast<size_t>(nb) * hc * hw;
    const S* ps = s_val.data.data() + static_cast<size_t>(nb) * hc * hw;
    const S* pt = t_val.data.data() + static_cast<size_t>(nb) * hc * hw;
    S* pxb = dst + static_cast<size_t>(hc) * hw;
    for (size_t i = 0; i < static_cast<size_t>(hc) * hw; ++i)
      pxb[i] = (pyb[i] - pt[i]) / ps[i];
  }

  // invconv inverse: multiply each spatial vector by W^-1
  Tensor<S> winv;
  mat_inverse_logabsdet(step.invconv_w, &winv);
  Tensor<S> x2({batch, c, h, w});
  for (int nb = 0; nb < batch; ++nb)
    for (int o = 0; o < c; ++o) {
      S* dst = x2.data.data() + (static_cast<size_t>(nb) * c + o) * hw;
      std::fill(dst, dst + hw, S(0));
      for (int ci = 0; ci < c; ++ci) {
        const S wv = winv.data[static_cast<size_t>(o) * c + ci];
        const S* src = x.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
        for (size_t i = 0; i < hw; ++i) dst[i] += wv * src[i];
      }
    }

  // actnorm inverse: x = y * exp(-logs) - bias
  for (int nb = 0; nb < batch; ++nb)
    for (int ci = 0; ci < c; ++ci) {
      const S inv_s = static_cast<S>(
          std::exp(-static_cast<double>(step.actnorm_logs.data[static_cast<size_t>(ci)])));
      const S bias = step.actnorm_bias.data[static_cast<size_t>(ci)];
      S* row = x2.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
      for (size_t i = 0; i < hw; ++i) row[i] = row[i] * inv_s - bias;
    }
  return x2;
}

template <typename S>
Tensor<S> GlowModel<S>::inverse(const LatentBundle<S>& bundle) const {
  if (static_cast<int>(bundle.zc_parts.size()) != cfg.n_blocks)
    throw ShapeError("glow inverse: expected " + std::to_string(cfg.n_blocks) +
                     " z_c parts, got " + std::to_string(bundle.zc_parts.size()));
  Tensor<S> carried = bundle.zd;
  for (int b = cfg.n_blocks - 1; b >= 0; --b) {
    const Tensor<S>& zc = bundle.zc_parts[static_cast<size_t>(b)];
    if (zc.dims.size() != 4 || carried.dims.size() != 4 ||
        zc.dims != carried.dims)
      throw ShapeError("glow inverse: z_c part " + zc.shape() +
                       " does not pair with carried " + carried.shape());
    // undo the split: factored-out half first, carried half second
    const int batch = zc.dims[0], hc = zc.dims[1], h = zc.dims[2], w = zc.dims[3];
    const size_t hw = static_cast<size_t>(h) * w;
    Tensor<S> x({batch, hc * 2, h, w});
    for (int nb = 0; nb < batch; ++nb) {
      S* dst = x.data.data() + static_cast<size_t>(nb) * hc * 2 * hw;
      std::copy(zc.data.begin() + static_cast<size_t>(nb) * hc * hw,
                zc.data.begin() + static_cast<size_t>(nb + 1) * hc * hw, dst);
      std::copy(carried.data.begin() + static_cast<size_t>(nb) * hc * hw,
                carried.data.begin() + static_cast<size_t>(nb + 1) * hc * hw,
                dst + static_cast<size_t>(hc) * hw);
    }
    for (int k = cfg.k_steps - 1; k >= 0; --k)
      x = step_inverse(x, blocks[static_cast<size_t>(b)][static_cast<size_t>(k)]);
    // unsqueeze via a scratch tape node
    Tape<S> scratch;
    carried = scratch.val(scratch.unsqueeze2(scratch.constant(x)));
  }
  return carried;
}

template class GlowModel<float>;
template class GlowModel<double>;

}  // namespace nfad
