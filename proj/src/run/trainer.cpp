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

#include "run/trainer.hpp"

#include <cmath>
#include <fstream>

#include "ad/adam.hpp"
#include "model/prior.hpp"

namespace nfad {

namespace {

// Gathers one batch as a (B, 1, n_mels, n_frames) tensor plus velocities.
void gather_batch(const PatchSet& set, const std::vector<size_t>& indices,
                  size_t begin, size_t end, Tensor<float>& x,
                  std::vector<double>& velocities) {
  const size_t dim = set.patch_dim();
  const int batch = static_cast<int>(end - begin);
  x.dims = {batch, 1, set.n_mels, set.n_frames};
  x.data.resize(static_cast<size_t>(batch) * dim);
  velocities.resize(static_cast<size_t>(batch));
  for (size_t i = begin; i < end; ++i) {
    const size_t src = indices[i];
    std::copy(set.data.begin() + src * dim, set.data.begin() + (src + 1) * dim,
              x.data.begin() + (i - begin) * dim);
    velocities[i - begin] = set.velocities[src];
  }
}

template <typename Ids>
void clip_gradients(Tape<float>& tape, const Ids& param_ids, double max_norm) {
  double total = 0.0;
  for (auto id : param_ids) {
    const Tensor<float>& g = tape.grad(id);
    for (float v : g.data) total += static_cast<double>(v) * v;
  }
  double norm = std::sqrt(total);
  if (norm <= max_norm || norm == 0.0) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (auto id : param_ids)
    for (float& v : tape.mutable_grad(id).data) v *= scale;
}

void check_finite(double loss, int epoch, size_t batch_index, bool guard) {
  if (guard && !std::isfinite(loss))
    throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                ", batch " + std::to_string(batch_index));
}

// Deterministic train/validation index split; validation takes the tail of
// one seeded shuffle.
void make_split(size_t count, double val_fraction, uint64_t seed,
                std::vector<size_t>& train_idx, std::vector<size_t>& val_idx) {
  std::vector<size_t> all(count);
  for (size_t i = 0; i < count; ++i) all[i] = i;
  if (val_fraction > 0.0) {
    Rng rng(mix_seed(seed, 0x5113));
    rng.shuffle(all);
    size_t n_val = static_cast<size_t>(val_fraction * static_cast<double>(count));
    val_idx.assign(all.end() - static_cast<long>(n_val), all.end());
    all.resize(count - n_val);
  }
  train_idx = std::move(all);
}

}  // namespace

PatchSet build_patch_set(const std::vector<ClipFeatures>& clips,
                         const NormalizerStats& stats) {
  PatchSet set;
  for (const ClipFeatures& c : clips) {
    if (set.count == 0) {
      set.n_mels = c.n_mels;
      set.n_frames = c.patch_frames;
    } else if (set.n_mels != c.n_mels || set.n_frames != c.patch_frames) {
      throw DataError("patch set: inconsistent patch dims across clips");
    }
    for (const std::vector<float>& p : c.patches) {
      set.data.insert(set.data.end(), p.begin(), p.end());
      set.velocities.push_back(static_cast<double>(c.velocity));
      ++set.count;
    }
  }
  if (set.count == 0) throw DataError("patch set: no patches");
  const float mu = static_cast<float>(stats.mean);
  const float inv = static_cast<float>(1.0 / stats.stddev);
  for (float& v : set.data) v = (v - mu) * inv;
  return set;
}

TrainResult train_flow(GlowModel<float>& model, const PatchSet& train_set,
                       const PriorConfig& prior, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  prior.validate();
  if (model.cfg.in_channels != 1 || model.cfg.in_height != train_set.n_mels ||
      model.cfg.in_width != train_set.n_frames)
    throw ShapeError("train_flow: model input (" + std::to_string(model.cfg.in_height) +
                     "," + std::to_string(model.cfg.in_width) + ") vs patches (" +
                     std::to_string(train_set.n_mels) + "," +
                     std::to_string(train_set.n_frames) + ")");

  std::vector<size_t> train_idx, val_idx;
  make_split(train_set.count, cfg.val_fraction, cfg.seed, train_idx, val_idx);

  Adam<float> adam(cfg.lr);
  Rng shuffle_rng(mix_seed(cfg.seed, 0xf10));
  TrainResult result;
  Tensor<float> x;
  std::vector<double> velocities;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    size_t n_batches = 0;
    for (size_t begin = 0; begin < train_idx.size();
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(begin + static_cast<size_t>(cfg.batch_size), train_idx.size());
      gather_batch(train_set, train_idx, begin, end, x, velocities);
      const int batch = static_cast<int>(end - begin);

      Tape<float> tape;
      auto xid = tape.input(x);
      bool init = epoch == 0 && begin == 0 && !model.actnorm_ready();
      auto out = model.forward(tape, xid, /*train=*/true, init);
      auto loss = nll_loss(tape, out, velocities, prior, batch);
      const double loss_value = static_cast<double>(tape.val(loss).data[0]);
      check_finite(loss_value, epoch + 1, n_batches, cfg.nan_guard);
      tape.backward(loss);
      if (cfg.grad_clip_norm > 0.0)
        clip_gradients(tape, out.param_ids, cfg.grad_clip_norm);

      std::vector<const Tensor<float>*> grads;
      grads.reserve(out.param_ids.size());
      for (auto id : out.param_ids) grads.push_back(&tape.grad(id));
      adam.step(model.parameters(), grads);

      epoch_loss += loss_value;
      ++n_batches;
    }
    epoch_loss /= static_cast<double>(n_batches);
    result.loss_log.push_back({epoch + 1, "nll", epoch_loss});
    if (epoch == 0) result.first_epoch_loss = epoch_loss;
    result.final_epoch_loss = epoch_loss;

    if (!val_idx.empty()) {
      double val_loss = 0.0;
      size_t val_batches = 0;
      for (size_t begin = 0; begin < val_idx.size();
           begin += static_cast<size_t>(cfg.batch_size)) {
        const size_t end =
            std::min(begin + static_cast<size_t>(cfg.batch_size), val_idx.size());
        gather_batch(train_set, val_idx, begin, end, x, velocities);
        Tape<float> tape;
        auto out = model.forward(tape, tape.input(x), /*train=*/false);
        auto loss =
            nll_loss(tape, out, velocities, prior, static_cast<int>(end - begin));
        val_loss += static_cast<double>(tape.val(loss).data[0]);
        ++val_batches;
      }
      result.loss_log.push_back({epoch + 1, "val_nll", val_loss / val_batches});
    }
    if (on_epoch && cfg.checkpoint_interval > 0 &&
        (epoch + 1) % cfg.checkpoint_interval == 0)
      on_epoch(epoch + 1);
  }
  return result;
}

TrainResult train_vae(VaeModel<float>& model, const PatchSet& train_set,
                      const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (model.cfg.input_dim != static_cast<int>(train_set.patch_dim()))
    throw ShapeError("train_vae: model input_dim " +
                     std::to_string(model.cfg.input_dim) + " vs patch dim " +
                     std::to_string(train_set.patch_dim()));

  std::vector<size_t> train_idx, val_idx;
  make_split(train_set.count, cfg.val_fraction, cfg.seed, train_idx, val_idx);

  Adam<float> adam(cfg.lr);
  Rng shuffle_rng(mix_seed(cfg.seed, 0xf10));
  Rng noise_rng(mix_seed(cfg.seed, 0x9015e));
  TrainResult result;
  const size_t dim = train_set.patch_dim();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    double er = 0.0, ek = 0.0, es = 0.0, et = 0.0;
    size_t n_batches = 0;
    for (size_t begin = 0; begin < train_idx.size();
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(begin + static_cast<size_t>(cfg.batch_size), train_idx.size());
      const int batch = static_cast<int>(end - begin);
      Tensor<float> x({batch, static_cast<int>(dim)});
      std::vector<double> velocities(static_cast<size_t>(batch));
      for (size_t i = begin; i < end; ++i) {
        const size_t src = train_idx[i];
        std::copy(train_set.data.begin() + src * dim,
                  train_set.data.begin() + (src + 1) * dim,
                  x.data.begin() + (i - begin) * dim);
        velocities[i - begin] = train_set.velocities[src];
      }
      Tensor<float> noise({batch, model.cfg.latent_dim});
      for (float& v : noise.data) v = static_cast<float>(noise_rng.normal());

      Tape<float> tape;
      auto xid = tape.input(x);
      auto out = model.forward(tape, xid, tape.constant(std::move(noise)),
                               /*train=*/true);
      auto nodes = model.loss(tape, xid, out, velocities);
      const double total = static_cast<double>(tape.val(nodes.total).data[0]);
      check_finite(total, epoch + 1, n_batches, cfg.nan_guard);
      tape.backward(nodes.total);
      if (cfg.grad_clip_norm > 0.0)
        clip_gradients(tape, out.param_ids, cfg.grad_clip_norm);

      std::vector<const Tensor<float>*> grads;
      grads.reserve(out.param_ids.size());
      for (auto id : out.param_ids) grads.push_back(&tape.grad(id));
      adam.step(model.parameters(), grads);

      er += static_cast<double>(tape.val(nodes.recon).data[0]);
      ek += static_cast<double>(tape.val(nodes.kld).data[0]);
      if (nodes.sup >= 0) es += static_cast<double>(tape.val(nodes.sup).data[0]);
      et += total;
      ++n_batches;
    }
    const double nb = static_cast<double>(n_batches);
    result.loss_log.push_back({epoch + 1, "recon", er / nb});
    result.loss_log.push_back({epoch + 1, "kld", ek / nb});
    if (model.cfg.gamma > 0.0)
      result.loss_log.push_back({epoch + 1, "sup", es / nb});
    result.loss_log.push_back({epoch + 1, "total", et / nb});
    if (epoch == 0) result.first_epoch_loss = et / nb;
    result.final_epoch_loss = et / nb;
    if (on_epoch && cfg.checkpoint_interval > 0 &&
        (epoch + 1) % cfg.checkpoint_interval == 0)
      on_epoch(epoch + 1);
  }
  return result;
}

void write_loss_log(const std::vector<LossRow>& log, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("loss log: cannot open " + path);
  f << "epoch,term,value\n";
  for (const LossRow& row : log)
    f << row.epoch << "," << row.term << "," << row.value << "\n";
}

}  // namespace nfad
