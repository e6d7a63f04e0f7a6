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

#include <doctest.h>

#include <cmath>
#include <functional>

#include "model/glow.hpp"
#include "model/prior.hpp"
#include "testutil.hpp"

using namespace nfad;
using testutil::random_tensor;
using testutil::rel_err;

namespace {

GlowConfig desk_config() {
  GlowConfig cfg;
  cfg.n_blocks = 2;
  cfg.k_steps = 3;
  cfg.in_channels = 1;
  cfg.in_height = 32;
  cfg.in_width = 16;
  return cfg;
}

// Flattens the latent bundle into one vector in a fixed order (z_c parts
// then z_d) so a numeric Jacobian can be assembled.
std::vector<double> flatten_latents(const LatentBundle<double>& b) {
  std::vector<double> out;
  for (const Tensor<double>& z : b.zc_parts)
    out.insert(out.end(), z.data.begin(), z.data.end());
  out.insert(out.end(), b.zd.data.begin(), b.zd.data.end());
  return out;
}

// Numeric ln|det J| of a map R^n -> R^n via central differences (h = 1e-3)
// plus Gaussian elimination on the assembled Jacobian.
double numeric_logabsdet(const std::function<std::vector<double>(const Tensor<double>&)>& f,
                         const Tensor<double>& x0, double h = 1e-3) {
  const int n = static_cast<int>(x0.numel());
  std::vector<double> jac(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    Tensor<double> plus = x0, minus = x0;
    plus.data[static_cast<size_t>(j)] += h;
    minus.data[static_cast<size_t>(j)] -= h;
    std::vector<double> fp = f(plus), fm = f(minus);
    REQUIRE(static_cast<int>(fp.size()) == n);
    for (int i = 0; i < n; ++i)
      jac[static_cast<size_t>(i) * n + j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return testutil::logabsdet_ref(jac, n);
}

}  // namespace

TEST_CASE("squeeze: (1,4,4) -> (4,2,2) and exact inverse") {
  Rng rng(3);
  Tape<double> tape;
  auto x = tape.constant(random_tensor<double>({1, 1, 4, 4}, rng));
  auto sq = tape.squeeze2(x);
  CHECK(tape.val(sq).dims == std::vector<int>{1, 4, 2, 2});
  auto back = tape.unsqueeze2(sq);
  CHECK(tape.val(back).data == tape.val(x).data);

  auto odd = tape.constant(random_tensor<double>({1, 1, 3, 4}, rng));
  CHECK_THROWS_AS(tape.squeeze2(odd), ShapeError);
}

TEST_CASE("actnorm closed forms") {
  GlowConfig cfg = desk_config();
  cfg.n_blocks = 1;
  cfg.k_steps = 1;
  cfg.in_height = 4;
  cfg.in_width = 4;
  GlowModel<double> model = GlowModel<double>::init(cfg, 0);
  // identity configuration: logs = 0, bias = 0, W = I, coupling CNN zeroed
  auto& step = model.blocks[0][0];
  step.invconv_w = Tensor<double>({4, 4});
  for (int i = 0; i < 4; ++i) step.invconv_w.data[static_cast<size_t>(i) * 4 + i] = 1.0;
  model.mark_actnorm_initialized();

  SUBCASE("s=1, b=0 is the identity with zero logdet on that layer") {
    // With the zero-initialized coupling, each step's logdet is only the
    // coupling's sigmoid(2) constant; actnorm and invconv contribute 0.
    Rng rng(9);
    Tensor<double> x = random_tensor<double>({1, 1, 4, 4}, rng);
    LatentBundle<double> b = model.forward_values(x);
    const double sig2 = 1.0 / (1.0 + std::exp(-2.0));
    CHECK(rel_err(b.log_det, 8.0 * std::log(sig2)) < 1e-9);
  }

  SUBCASE("s=2 per channel: logdet = h*w*sum(ln s)") {
    for (auto& blk : model.blocks)
      for (auto& s : blk)
        std::fill(s.actnorm_logs.data.begin(), s.actnorm_logs.data.end(),
                  std::log(2.0));
    Rng rng(10);
    Tensor<double> x = random_tensor<double>({1, 1, 4, 4}, rng);
    LatentBundle<double> b = model.forward_values(x);
    // squeeze -> (4,2,2): h*w = 4, channels = 4 => actnorm logdet 4*4*ln2
    const double actnorm_ld = 4.0 * 4.0 * std::log(2.0);
    const double coupling_ld = 8.0 * std::log(1.0 / (1.0 + std::exp(-2.0)));
    CHECK(rel_err(b.log_det, actnorm_ld + coupling_ld) < 1e-9);
  }
}

TEST_CASE("actnorm data-dependent init standardizes per channel") {
  GlowConfig cfg = desk_config();
  GlowModel<float> model = GlowModel<float>::init(cfg, 7);
  Rng rng(11);
  Tensor<float> x = random_tensor<float>({64, 1, 32, 16}, rng, 2.5);
  for (float& v : x.data) v += 1.0f;

  Tape<float> tape;
  auto out = model.forward(tape, tape.input(x), /*train=*/false,
                           /*init_actnorm=*/true);
  (void)out;
  CHECK(model.actnorm_ready());

  // Verify on the first step: re-run the squeeze and actnorm alone.
  Tape<float> t2;
  auto sq = t2.squeeze2(t2.constant(x));
  auto& step = model.blocks[0][0];
  auto y = t2.channel_scale(t2.channel_add(sq, t2.constant(step.actnorm_bias)),
                            t2.exp(t2.constant(step.actnorm_logs)));
  const Tensor<float>& yv = t2.val(y);
  const int c = yv.dims[1];
  const size_t hw = static_cast<size_t>(yv.dims[2]) * yv.dims[3];
  for (int ci = 0; ci < c; ++ci) {
    double sum = 0.0, sumsq = 0.0;
    size_t n = 0;
    for (int nb = 0; nb < yv.dims[0]; ++nb) {
      const float* row = yv.data.data() + (static_cast<size_t>(nb) * c + ci) * hw;
      for (size_t i = 0; i < hw; ++i) {
        sum += row[i];
        sumsq += static_cast<double>(row[i]) * row[i];
        ++n;
      }
    }
    double mean = sum / static_cast<double>(n);
    double var = sumsq / static_cast<double>(n) - mean * mean;
    CHECK(std::fabs(mean) < 1e-4);
    CHECK(var == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("invconv closed forms: identity, permutation, 2I") {
  Rng rng(13);
  SUBCASE("identity and permutation have zero logdet") {
    for (bool permute : {false, true}) {
      Tensor<double> w({4, 4});
      for (int i = 0; i < 4; ++i) {
        int j = permute ? (i + 1) % 4 : i;
        w.data[static_cast<size_t>(i) * 4 + j] = 1.0;
      }
      Tape<double> tape;
      auto ld = tape.mat_logabsdet(tape.constant(w));
      CHECK(std::fabs(tape.val(ld).data[0]) < 1e-12);
      if (permute) {
        // channels permuted: y[:, i] = x[:, i+1 mod 4]
        auto x = tape.constant(random_tensor<double>({1, 4, 2, 2}, rng));
        auto y = tape.conv2d(x, tape.reshape(tape.constant(w), {4, 4, 1, 1}),
                             tape.constant(Tensor<double>::zeros({4})));
        const auto& xv = tape.val(x);
        const auto& yv = tape.val(y);
        for (int i = 0; i < 4; ++i)
          for (int p = 0; p < 4; ++p)
            CHECK(yv.data[static_cast<size_t>(i) * 4 + p] ==
                  doctest::Approx(xv.data[static_cast<size_t>((i + 1) % 4) * 4 + p]));
      }
    }
  }
  SUBCASE("W = 2I on (2,4,4): logdet = h*w*ln det = 16*ln4") {
    Tensor<double> w({2, 2}, {2.0, 0.0, 0.0, 2.0});
    Tape<double> tape;
    auto ld = tape.scalar_mul(tape.mat_logabsdet(tape.constant(w)), 16.0);
    CHECK(rel_err(tape.val(ld).data[0], 16.0 * std::log(4.0)) < 1e-12);
  }
}

TEST_CASE("coupling at zero init: y_b = sigmoid(2) x_b, logdet closed form") {
  GlowConfig cfg;
  cfg.n_blocks = 1;
  cfg.k_steps = 1;
  cfg.in_channels = 2;
  cfg.in_height = 4;
  cfg.in_width = 4;
  GlowModel<double> model = GlowModel<double>::init(cfg, 3);
  // identity actnorm + identity invconv isolate the coupling
  auto& step = model.blocks[0][0];
  step.invconv_w = Tensor<double>({8, 8});
  for (int i = 0; i < 8; ++i) step.invconv_w.data[static_cast<size_t>(i) * 8 + i] = 1.0;
  model.mark_actnorm_initialized();

  Rng rng(5);
  Tensor<double> x = random_tensor<double>({1, 2, 4, 4}, rng);
  LatentBundle<double> bundle = model.forward_values(x);

  // reconstruct what the forward saw: squeeze(x) -> (8,2,2)
  Tape<double> t;
  const auto& sq = t.val(t.squeeze2(t.constant(x)));
  const double sig2 = 1.0 / (1.0 + std::exp(-2.0));
  // latents: z_c = first 4 channels (x_a), z_d = sigmoid(2) * x_b
  for (size_t i = 0; i < bundle.zc_parts[0].data.size(); ++i)
    CHECK(bundle.zc_parts[0].data[i] == doctest::Approx(sq.data[i]));
  for (size_t i = 0; i < bundle.zd.data.size(); ++i)
    CHECK(bundle.zd.data[i] ==
          doctest::Approx(sig2 * sq.data[bundle.zc_parts[0].data.size() + i]));
  // logdet = dim(x_b) * ln(sigmoid(2))
  CHECK(rel_err(bundle.log_det, 16.0 * std::log(sig2)) < 1e-9);
}

TEST_CASE("model dim accounting: dim(z_c) + dim(z_d) = input dim") {
  for (int n_blocks : {1, 2, 3}) {
    GlowConfig cfg;
    cfg.n_blocks = n_blocks;
    cfg.k_steps = 2;
    cfg.in_channels = 1;
    cfg.in_height = 32;
    cfg.in_width = 16;
    GlowModel<float> model = GlowModel<float>::init(cfg, 1);
    model.mark_actnorm_initialized();
    Rng rng(7);
    LatentBundle<float> b =
        model.forward_values(random_tensor<float>({1, 1, 32, 16}, rng));
    CHECK(b.zc_numel() + b.zd.numel() == cfg.input_numel());
    CHECK(b.zd.dims[1] == cfg.zd_channels());
  }
}

TEST_CASE("invertibility: inverse(forward(x)) = x (float, random params)") {
  GlowConfig cfg = desk_config();
  GlowModel<float> model = GlowModel<float>::init(cfg, 21);
  // random-ish actnorm around identity
  Rng rng(22);
  for (auto& blk : model.blocks)
    for (auto& s : blk) {
      for (float& v : s.actnorm_logs.data) v = static_cast<float>(0.2 * rng.normal());
      for (float& v : s.actnorm_bias.data) v = static_cast<float>(0.3 * rng.normal());
      for (float& v : s.conv3_w.data) v = static_cast<float>(0.05 * rng.normal());
    }
  model.mark_actnorm_initialized();
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Tensor<float> x = random_tensor<float>({1, 1, 32, 16}, rng);
    LatentBundle<float> b = model.forward_values(x);
    Tensor<float> back = model.inverse(b);
    worst = std::max(worst, testutil::max_abs_diff(back.data, x.data));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("invertibility at 64-bit is tighter than 1e-8") {
  GlowConfig cfg = desk_config();
  GlowModel<double> model = GlowModel<double>::init(cfg, 33);
  Rng rng(34);
  for (auto& blk : model.blocks)
    for (auto& s : blk)
      for (double& v : s.conv3_w.data) v = 0.05 * rng.normal();
  model.mark_actnorm_initialized();
  Tensor<double> x = random_tensor<double>({1, 1, 32, 16}, rng);
  Tensor<double> back = model.inverse(model.forward_values(x));
  CHECK(testutil::max_abs_diff(back.data, x.data) < 1e-8);
}

TEST_CASE("log-det oracle: each layer type on (2,4,4)") {
  Rng rng(55);

  SUBCASE("actnorm + invconv + coupling as one step") {
    GlowConfig cfg;
    cfg.n_blocks = 1;
    cfg.k_steps = 1;
    cfg.in_channels = 2;
    cfg.in_height = 4;
    cfg.in_width = 4;
    GlowModel<double> model = GlowModel<double>::init(cfg, 56);
    for (auto& blk : model.blocks)
      for (auto& s : blk) {
        for (double& v : s.actnorm_logs.data) v = 0.3 * rng.normal();
        for (double& v : s.actnorm_bias.data) v = 0.3 * rng.normal();
        for (double& v : s.conv3_w.data) v = 0.1 * rng.normal();
        for (double& v : s.conv3_b.data) v = 0.1 * rng.normal();
      }
    model.mark_actnorm_initialized();
    Tensor<double> x0 = random_tensor<double>({1, 2, 4, 4}, rng);
    auto f = [&](const Tensor<double>& x) {
      return flatten_latents(model.forward_values(x));
    };
    double analytic = model.forward_values(x0).log_det;
    double numeric = numeric_logabsdet(f, x0);
    CHECK(rel_err(analytic, numeric) < 1e-3);
  }

  SUBCASE("full 2-step model") {
    GlowConfig cfg;
    cfg.n_blocks = 1;
    cfg.k_steps = 2;
    cfg.in_channels = 2;
    cfg.in_height = 4;
    cfg.in_width = 4;
    GlowModel<double> model = GlowModel<double>::init(cfg, 57);
    for (auto& blk : model.blocks)
      for (auto& s : blk) {
        for (double& v : s.actnorm_logs.data) v = 0.2 * rng.normal();
        for (double& v : s.actnorm_bias.data) v = 0.2 * rng.normal();
        for (double& v : s.conv3_w.data) v = 0.1 * rng.normal();
      }
    model.mark_actnorm_initialized();
    Tensor<double> x0 = random_tensor<double>({1, 2, 4, 4}, rng);
    auto f = [&](const Tensor<double>& x) {
      return flatten_latents(model.forward_values(x));
    };
    CHECK(rel_err(model.forward_values(x0).log_det, numeric_logabsdet(f, x0)) < 1e-3);
  }
}

TEST_CASE("identity flow: likelihood equals standard-normal density of input") {
  // All steps identity except the coupling constant; handled by zeroing the
  // sigmoid reparameterization's effect: use a model where coupling output
  // is forced through by replacing conv3 weights with zero and checking
  // against the analytically shifted density.
  GlowConfig cfg;
  cfg.n_blocks = 1;
  cfg.k_steps = 1;
  cfg.in_channels = 2;
  cfg.in_height = 4;
  cfg.in_width = 4;
  GlowModel<double> model = GlowModel<double>::init(cfg, 58);
  auto& step = model.blocks[0][0];
  step.invconv_w = Tensor<double>({8, 8});
  for (int i = 0; i < 8; ++i) step.invconv_w.data[static_cast<size_t>(i) * 8 + i] = 1.0;
  model.mark_actnorm_initialized();

  Rng rng(59);
  Tensor<double> x = random_tensor<double>({1, 2, 4, 4}, rng);
  LatentBundle<double> b = model.forward_values(x);
  ScoreBreakdown sb = score_bundle(b, 0.0);

  // With identity actnorm/invconv and zeroed CNN, z = (x_a, s2*x_b) with
  // constant s2 = sigmoid(2). log p(x) = log N(z) + dim_b*ln(s2) must match
  // the change-of-variables density computed by hand.
  const double s2 = 1.0 / (1.0 + std::exp(-2.0));
  Tape<double> t;
  const auto& sq = t.val(t.squeeze2(t.constant(x)));
  double by_hand = 0.0;
  for (size_t i = 0; i < 16; ++i) {
    double za = sq.data[i];
    by_hand += -0.5 * za * za;
  }
  for (size_t i = 16; i < 32; ++i) {
    double zb = s2 * sq.data[i];
    by_hand += -0.5 * zb * zb;
  }
  by_hand += -0.5 * std::log(2.0 * M_PI) * 32.0 + 16.0 * std::log(s2);
  CHECK(rel_err(sb.log_p_x, by_hand, 1e-6) < 1e-9);
}

TEST_CASE("sampling roundtrip: z_d mean set to k*v decodes and re-encodes") {
  GlowConfig cfg = desk_config();
  GlowModel<float> model = GlowModel<float>::init(cfg, 61);
  model.mark_actnorm_initialized();
  Rng rng(62);
  const double k = 0.01, v = 400.0;
  LatentBundle<float> b;
  // draw z ~ N(0,1), shift z_d by k*v
  b.zc_parts.push_back(random_tensor<float>({1, 2, 16, 8}, rng));
  b.zc_parts.push_back(random_tensor<float>({1, 4, 8, 4}, rng));
  b.zd = random_tensor<float>({1, 4, 8, 4}, rng);
  for (float& z : b.zd.data) z += static_cast<float>(k * v);

  Tensor<float> x = model.inverse(b);
  LatentBundle<float> re = model.forward_values(x);
  double mean = 0.0;
  for (float z : re.zd.data) mean += z;
  mean /= static_cast<double>(re.zd.numel());
  // re-encoded z_d mean recovers k*v plus the N(0,1) sample mean; with 128
  // dims the sample mean has stddev ~0.088, so verify against the drawn one
  double drawn_mean = 0.0;
  for (float z : b.zd.data) drawn_mean += z;
  drawn_mean /= static_cast<double>(b.zd.numel());
  CHECK(std::fabs(mean - drawn_mean) < 1e-2);
  CHECK(mean == doctest::Approx(k * v).epsilon(0.25));
}

TEST_CASE("glow config validation") {
  GlowConfig cfg = desk_config();
  cfg.in_height = 30;  // not divisible by 2^2
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = desk_config();
  cfg.n_blocks = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  GlowConfig ok = desk_config();
  GlowModel<float> model = GlowModel<float>::init(ok, 1);
  Rng rng(1);
  Tape<float> tape;
  auto bad = tape.constant(random_tensor<float>({1, 1, 16, 16}, rng));
  CHECK_THROWS_AS(model.forward(tape, bad, false), ShapeError);
}

TEST_CASE("actnorm must be initialized before scoring") {
  GlowModel<float> model = GlowModel<float>::init(desk_config(), 5);
  Rng rng(6);
  Tensor<float> x = random_tensor<float>({1, 1, 32, 16}, rng);
  CHECK_THROWS_AS(model.forward_values(x), ContractError);
}
