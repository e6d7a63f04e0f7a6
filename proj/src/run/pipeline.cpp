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

#include "run/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "audio/dataset.hpp"
#include "audio/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace nfad {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

json desk_preset() {
  return json{
      {"preset", "desk"},
      {"seed", 0},
      {"synth",
       {{"train_velocities", {100, 200, 300, 400, 500, 600, 700}},
        {"test_velocities",
         {50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600, 650, 700, 750}},
        {"train_distances", {100, 250, 500}},
        {"test_distance", 500},
        {"train_clips_per_set", 5},
        {"test_clips_per_set", 6}}},
      {"features",
       {{"fft_length", 1024},
        {"hop", 512},
        {"n_mels", 32},
        {"patch_frames", 16},
        {"patch_hop", 16},
        {"sample_rate", 16000},
        {"floor", 1e-10},
        {"center_pad", true}}},
      {"train",
       {{"epochs", 80},
        {"batch_size", 128},
        {"lr", 3e-4},
        {"seed", 0},
        {"model", "glow-multi"},
        {"constrained", true},
        {"checkpoint_interval", 0},
        {"nan_guard", true},
        {"grad_clip_norm", 0.0},
        {"val_fraction", 0.0},
        {"glow", {{"n_blocks", 2}, {"k_steps", 3}, {"hidden_channels", 32}}},
        {"vae",
         {{"hidden_dim", 128},
          {"latent_dim", 8},
          {"beta", 1.0},
          {"gamma", 0.01},
          {"k_vae", 0.01}}}}},
      {"prior", {{"constrained", true}, {"k", 0.01}}},
      {"score", {{"aggregate", "mean"}}},
  };
}

json paper_preset() {
  json cfg = desk_preset();
  cfg["preset"] = "paper";
  cfg["synth"]["train_clips_per_set"] = 10;
  cfg["synth"]["test_clips_per_set"] = 10;
  cfg["features"]["n_mels"] = 128;
  cfg["features"]["patch_frames"] = 64;
  cfg["features"]["patch_hop"] = 16;  // 64 frames with 48 overlap
  cfg["train"]["epochs"] = 1000;
  cfg["train"]["lr"] = 1e-4;
  cfg["train"]["glow"] = {{"n_blocks", 3}, {"k_steps", 5}, {"hidden_channels", 32}};
  return cfg;
}

std::string require_string(const json& cfg, const char* key) {
  if (!cfg.contains(key) || !cfg[key].is_string())
    throw ConfigError(std::string("config: missing required string field '") + key +
                      "'");
  return cfg[key].get<std::string>();
}

fs::path ensure_out_dir(const json& cfg) {
  fs::path out(require_string(cfg, "out"));
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec && !fs::is_directory(out))
    throw IoError("config: cannot create output directory " + out.string());
  return out;
}

void write_config_snapshot(const json& cfg, const fs::path& path, Artifacts& made) {
  std::ofstream f(path);
  if (!f) throw IoError("config snapshot: cannot open " + path.string());
  f << cfg.dump(2) << "\n";
  made.add(path.string());
}

SynthConfig parse_synth(const json& cfg) {
  SynthConfig sc;
  const json& j = cfg.at("synth");
  sc.train_velocities = j.at("train_velocities").get<std::vector<double>>();
  sc.test_velocities = j.at("test_velocities").get<std::vector<double>>();
  sc.train_distances = j.at("train_distances").get<std::vector<double>>();
  sc.test_distance = j.at("test_distance").get<double>();
  sc.train_clips_per_set = j.at("train_clips_per_set").get<int>();
  sc.test_clips_per_set = j.at("test_clips_per_set").get<int>();
  sc.seed = cfg.value("seed", 0ULL);
  return sc;
}

FeatureConfig parse_features(const json& cfg) {
  FeatureConfig fc;
  const json& j = cfg.at("features");
  fc.fft_length = j.at("fft_length").get<int>();
  fc.hop = j.at("hop").get<int>();
  fc.n_mels = j.at("n_mels").get<int>();
  fc.patch_frames = j.at("patch_frames").get<int>();
  fc.patch_hop = j.at("patch_hop").get<int>();
  fc.sample_rate = j.at("sample_rate").get<int>();
  fc.floor = j.at("floor").get<double>();
  fc.center_pad = j.at("center_pad").get<bool>();
  fc.validate();
  return fc;
}

TrainConfig parse_train(const json& cfg) {
  TrainConfig tc;
  const json& j = cfg.at("train");
  tc.epochs = j.at("epochs").get<int>();
  tc.batch_size = j.at("batch_size").get<int>();
  tc.lr = j.at("lr").get<double>();
  tc.seed = j.value("seed", cfg.value("seed", 0ULL));
  tc.checkpoint_interval = j.value("checkpoint_interval", 0);
  tc.nan_guard = j.value("nan_guard", true);
  tc.grad_clip_norm = j.value("grad_clip_norm", 0.0);
  tc.val_fraction = j.value("val_fraction", 0.0);
  tc.validate();
  return tc;
}

PriorConfig parse_prior(const json& cfg, bool constrained) {
  PriorConfig pc;
  pc.constrained = constrained;
  pc.k = cfg.at("prior").at("k").get<double>();
  pc.validate();
  return pc;
}

ClipAggregate parse_aggregate(const json& cfg) {
  std::string mode = cfg.contains("score")
                         ? cfg["score"].value("aggregate", "mean")
                         : "mean";
  if (mode == "mean") return ClipAggregate::kMean;
  if (mode == "max") return ClipAggregate::kMax;
  throw ConfigError("config: score.aggregate must be 'mean' or 'max'");
}

// Reads WAVs listed in the manifest and produces per-clip patch features.
std::vector<ClipFeatures> featurize_split(const DatasetManifest& manifest,
                                          const fs::path& data_dir,
                                          const FeatureConfig& fc,
                                          const std::string& split_prefix) {
  std::vector<const ManifestEntry*> entries;
  for (const ManifestEntry& e : manifest.entries)
    if (e.split.rfind(split_prefix, 0) == 0) entries.push_back(&e);
  std::vector<ClipFeatures> out(entries.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(entries.size()); ++i) {
    const ManifestEntry& e = *entries[static_cast<size_t>(i)];
    WavData wav = read_wav((data_dir / e.path).string());
    WaveformClip clip;
    clip.samples = std::move(wav.samples);
    clip.sample_rate = wav.sample_rate;
    clip.params = e.params;
    MelSpectrogram spec = stft_logmel(clip, fc);
    spec.clip_id = fs::path(e.path).stem().string();
    std::vector<FeaturePatch> patches = extract_patches(spec, fc);
    ClipFeatures& cf = out[static_cast<size_t>(i)];
    cf.clip_id = spec.clip_id;
    cf.velocity = static_cast<float>(e.params.velocity);
    cf.anomalous = e.params.anomalous;
    cf.n_mels = fc.n_mels;
    cf.patch_frames = fc.patch_frames;
    for (FeaturePatch& p : patches) cf.patches.push_back(std::move(p.values));
  }
  return out;
}

Tensor<float> patch_tensor(const std::vector<float>& values, int n_mels,
                           int n_frames, const NormalizerStats& stats) {
  Tensor<float> x({1, 1, n_mels, n_frames});
  const float mu = static_cast<float>(stats.mean);
  const float inv = static_cast<float>(1.0 / stats.stddev);
  for (size_t i = 0; i < values.size(); ++i) x.data[i] = (values[i] - mu) * inv;
  return x;
}

struct MethodSpec {
  std::string label;
  std::string stem;       // checkpoint stem
  bool use_invariant;     // column choice for glow; recon vs kld for vae
  bool vae;
};

const std::vector<MethodSpec>& method_table() {
  static const std::vector<MethodSpec> kMethods = {
      {"VAE (reconstruction error)", "vae", true, true},
      {"VAE (KLD)", "vae", false, true},
      {"VAE supervised (KLD)", "vae_sup", false, true},
      {"Glow single-scale (NLL)", "glow_single", false, false},
      {"Glow single-scale conditioned (invariant)", "glow_single_cond", true, false},
      {"Glow multi-scale (NLL)", "glow_multi", false, false},
      {"Glow multi-scale conditioned (invariant)", "glow_multi_cond", true, false},
  };
  return kMethods;
}

}  // namespace

std::string checkpoint_stem(const std::string& model, bool constrained,
                            double gamma) {
  if (model == "vae") return gamma > 0.0 ? "vae_sup" : "vae";
  std::string stem = model == "glow-single" ? "glow_single" : "glow_multi";
  if (constrained) stem += "_cond";
  return stem;
}

json preset_config(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw ConfigError("unknown preset '" + name + "' (want desk or paper)");
}

Artifacts run_synth(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  SynthConfig sc = parse_synth(cfg);
  DatasetManifest manifest = make_dataset(out.string(), sc);
  made.add((out / "manifest.json").string());
  for (const ManifestEntry& e : manifest.entries) made.add((out / e.path).string());
  write_config_snapshot(cfg, out / "synth_config.json", made);
  return made;
}

Artifacts run_featurize(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  fs::path data_dir(require_string(cfg, "data"));
  FeatureConfig fc = parse_features(cfg);
  DatasetManifest manifest = read_manifest((data_dir / "manifest.json").string());

  auto train = featurize_split(manifest, data_dir, fc, "train");
  auto test = featurize_split(manifest, data_dir, fc, "test");
  if (train.empty() || test.empty())
    throw DataError("featurize: manifest has no train or no test entries");
  write_feature_cache(train, (out / "train.nfft").string());
  write_feature_cache(test, (out / "test.nfft").string());
  made.add((out / "train.nfft").string());
  made.add((out / "test.nfft").string());
  write_config_snapshot(cfg, out / "featurize_config.json", made);
  return made;
}

Artifacts run_train(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  fs::path feat_dir(require_string(cfg, "features_dir"));
  const json& jt = cfg.at("train");
  const std::string model_kind = jt.at("model").get<std::string>();
  const bool constrained = jt.value("constrained", false);
  TrainConfig tc = parse_train(cfg);

  auto train_clips = read_feature_cache((feat_dir / "train.nfft").string());
  NormalizerStats stats;
  {
    // Global scalar standardization fitted on the training split.
    std::vector<FeaturePatch> flat;
    for (const ClipFeatures& c : train_clips)
      for (const std::vector<float>& p : c.patches) {
        FeaturePatch fp;
        fp.values = p;
        flat.push_back(std::move(fp));
      }
    stats = fit_normalizer(flat);
  }
  PatchSet set = build_patch_set(train_clips, stats);

  Checkpoint ckpt;
  ckpt.stats = stats;
  std::string stem;
  TrainResult result;
  if (model_kind == "glow-single" || model_kind == "glow-multi") {
    const json& jg = jt.at("glow");
    GlowConfig gc;
    gc.n_blocks = model_kind == "glow-single" ? 1 : jg.at("n_blocks").get<int>();
    gc.k_steps = jg.at("k_steps").get<int>();
    gc.hidden_channels = jg.at("hidden_channels").get<int>();
    gc.in_channels = 1;
    gc.in_height = set.n_mels;
    gc.in_width = set.n_frames;
    ckpt.kind = Checkpoint::Kind::kGlow;
    ckpt.glow = GlowModel<float>::init(gc, tc.seed);
    ckpt.prior = parse_prior(cfg, constrained);
    stem = checkpoint_stem(model_kind, constrained, 0.0);
    fs::path ckpt_path = out / (stem + ".nfad");
    auto saver = [&](int epoch) {
      save_checkpoint(ckpt, (out / (stem + "_epoch" + std::to_string(epoch) + ".nfad"))
                                .string());
    };
    result = train_flow(ckpt.glow, set, ckpt.prior, tc, saver);
    save_checkpoint(ckpt, ckpt_path.string());
    made.add(ckpt_path.string());
  } else if (model_kind == "vae") {
    const json& jv = jt.at("vae");
    VaeConfig vc;
    vc.input_dim = static_cast<int>(set.patch_dim());
    vc.hidden_dim = jv.at("hidden_dim").get<int>();
    vc.latent_dim = jv.at("latent_dim").get<int>();
    vc.beta = jv.at("beta").get<double>();
    vc.gamma = jv.at("gamma").get<double>();
    vc.k_vae = jv.at("k_vae").get<double>();
    ckpt.kind = Checkpoint::Kind::kVae;
    ckpt.vae = VaeModel<float>::init(vc, tc.seed);
    stem = checkpoint_stem(model_kind, false, vc.gamma);
    fs::path ckpt_path = out / (stem + ".nfad");
    auto saver = [&](int epoch) {
      save_checkpoint(ckpt, (out / (stem + "_epoch" + std::to_string(epoch) + ".nfad"))
                                .string());
    };
    result = train_vae(ckpt.vae, set, tc, saver);
    save_checkpoint(ckpt, ckpt_path.string());
    made.add(ckpt_path.string());
  } else {
    throw ConfigError("train: unknown model '" + model_kind +
                      "' (want glow-single, glow-multi or vae)");
  }

  fs::path log_path = out / (stem + "_loss.csv");
  write_loss_log(result.loss_log, log_path.string());
  made.add(log_path.string());
  write_config_snapshot(cfg, out / (stem + "_train_config.json"), made);
  return made;
}

std::vector<ScoredClip> score_clips_glow(const Checkpoint& ckpt,
                                         const std::vector<ClipFeatures>& clips,
                                         ClipAggregate aggregate) {
  if (ckpt.kind != Checkpoint::Kind::kGlow)
    throw ContractError("score: checkpoint does not hold a flow model");
  // Frozen parameters: scoring across clips is read-shared and parallel.
  std::vector<ScoredClip> rows(clips.size());
  GlowModel<float>& model = const_cast<GlowModel<float>&>(ckpt.glow);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(clips.size()); ++i) {
    const ClipFeatures& clip = clips[static_cast<size_t>(i)];
    std::vector<double> inv_scores, full_scores, v_estimates;
    for (const std::vector<float>& p : clip.patches) {
      Tensor<float> x =
          patch_tensor(p, clip.n_mels, clip.patch_frames, ckpt.stats);
      LatentBundle<float> bundle = model.forward_values(x);
      double v_hat = ckpt.prior.constrained
                         ? estimate_velocity_patch(bundle, ckpt.prior)
                         : kNan;
      // Unconstrained: z_d ~ N(0,1). Constrained: test-time velocity is
      // unknown, so the full NLL uses the plug-in mean k * v_hat.
      double zd_mean = ckpt.prior.constrained ? ckpt.prior.k * v_hat : 0.0;
      ScoreBreakdown sb = score_bundle(bundle, zd_mean);
      if (sb.log_p_x != sb.log_p_zc + sb.log_p_zd + sb.log_det)
        throw Error("score: factorization identity violated");
      inv_scores.push_back(sb.anomaly_score);
      full_scores.push_back(-sb.log_p_x);
      if (ckpt.prior.constrained) v_estimates.push_back(v_hat);
    }
    ScoredClip row;
    row.clip_id = clip.clip_id;
    row.velocity = static_cast<double>(clip.velocity);
    row.anomalous = clip.anomalous;
    row.score_invariant = clip_anomaly_score(inv_scores, aggregate);
    row.score_full_nll = clip_anomaly_score(full_scores, aggregate);
    row.v_estimate = ckpt.prior.constrained
                         ? estimate_velocity_clip(v_estimates)
                         : kNan;
    rows[static_cast<size_t>(i)] = std::move(row);
  }
  return rows;
}

std::vector<ScoredClip> score_clips_vae(const Checkpoint& ckpt,
                                        const std::vector<ClipFeatures>& clips,
                                        ClipAggregate aggregate) {
  if (ckpt.kind != Checkpoint::Kind::kVae)
    throw ContractError("score: checkpoint does not hold a VAE model");
  std::vector<ScoredClip> rows(clips.size());
  VaeModel<float>& model = const_cast<VaeModel<float>&>(ckpt.vae);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(clips.size()); ++i) {
    const ClipFeatures& clip = clips[static_cast<size_t>(i)];
    const int n_patches = static_cast<int>(clip.patches.size());
    const int dim = clip.n_mels * clip.patch_frames;
    Tensor<float> x({n_patches, dim});
    const float mu = static_cast<float>(ckpt.stats.mean);
    const float inv = static_cast<float>(1.0 / ckpt.stats.stddev);
    for (int p = 0; p < n_patches; ++p)
      for (int j = 0; j < dim; ++j)
        x.data[static_cast<size_t>(p) * dim + j] =
            (clip.patches[static_cast<size_t>(p)][static_cast<size_t>(j)] - mu) * inv;
    auto scores = model.score(x);
    std::vector<double> v_est(scores.mu0.size());
    for (size_t p = 0; p < scores.mu0.size(); ++p)
      v_est[p] = scores.mu0[p] / ckpt.vae.cfg.k_vae;
    ScoredClip row;
    row.clip_id = clip.clip_id;
    row.velocity = static_cast<double>(clip.velocity);
    row.anomalous = clip.anomalous;
    // recon in the first score column, KLD in the second
    row.score_invariant = clip_anomaly_score(scores.recon, aggregate);
    row.score_full_nll = clip_anomaly_score(scores.kld, aggregate);
    row.v_estimate =
        ckpt.vae.cfg.gamma > 0.0 ? estimate_velocity_clip(v_est) : kNan;
    rows[static_cast<size_t>(i)] = std::move(row);
  }
  return rows;
}

VelocityReport velocity_report(const Checkpoint& ckpt,
                               const std::vector<ClipFeatures>& clips,
                               const std::vector<double>& unseen_velocities) {
  if (ckpt.kind == Checkpoint::Kind::kGlow && !ckpt.prior.constrained)
    throw ContractError(
        "velocity_report: checkpoint is unconstrained; no velocity latent");
  if (ckpt.kind == Checkpoint::Kind::kVae && ckpt.vae.cfg.gamma <= 0.0)
    throw ContractError(
        "velocity_report: VAE trained without supervision; no velocity latent");
  std::set<double> unseen(unseen_velocities.begin(), unseen_velocities.end());
  std::vector<ClipFeatures> selected;
  for (const ClipFeatures& c : clips)
    if (!c.anomalous && unseen.count(static_cast<double>(c.velocity)))
      selected.push_back(c);
  if (selected.empty())
    throw DataError("velocity_report: no normal clips at unseen velocities");
  std::vector<ScoredClip> rows =
      ckpt.kind == Checkpoint::Kind::kGlow
          ? score_clips_glow(ckpt, selected, ClipAggregate::kMean)
          : score_clips_vae(ckpt, selected, ClipAggregate::kMean);
  VelocityReport report;
  std::vector<double> v, v_hat;
  for (const ScoredClip& r : rows) {
    report.pairs.emplace_back(r.velocity, r.v_estimate);
    v.push_back(r.velocity);
    v_hat.push_back(r.v_estimate);
  }
  report.pearson_r = pearson(v, v_hat);
  return report;
}

Artifacts run_score(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  fs::path ckpt_path(require_string(cfg, "checkpoint"));
  fs::path features_path(require_string(cfg, "features"));
  Checkpoint ckpt = load_checkpoint(ckpt_path.string());
  auto clips = read_feature_cache(features_path.string());
  ClipAggregate aggregate = parse_aggregate(cfg);
  std::vector<ScoredClip> rows = ckpt.kind == Checkpoint::Kind::kGlow
                                     ? score_clips_glow(ckpt, clips, aggregate)
                                     : score_clips_vae(ckpt, clips, aggregate);
  std::string stem = ckpt_path.stem().string();
  fs::path csv = out / (stem + "_scores.csv");
  write_scores_csv(rows, csv.string());
  made.add(csv.string());
  write_config_snapshot(cfg, out / (stem + "_score_config.json"), made);
  return made;
}

Artifacts run_eval(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  fs::path ckpt_dir(require_string(cfg, "checkpoints_dir"));
  fs::path features_path(require_string(cfg, "features"));
  fs::path manifest_path(require_string(cfg, "manifest"));
  DatasetManifest manifest = read_manifest(manifest_path.string());
  auto clips = read_feature_cache(features_path.string());
  ClipAggregate aggregate = parse_aggregate(cfg);
  std::set<double> seen(manifest.seen_velocities.begin(),
                        manifest.seen_velocities.end());
  std::set<double> unseen(manifest.unseen_velocities.begin(),
                          manifest.unseen_velocities.end());

  std::vector<MethodResult> table;
  std::string last_stem;
  std::vector<ScoredClip> last_rows;
  for (const MethodSpec& m : method_table()) {
    MethodResult row;
    row.method = m.label;
    fs::path ckpt_path = ckpt_dir / (m.stem + ".nfad");
    if (!fs::exists(ckpt_path)) {
      table.push_back(row);  // absent row; the run continues
      continue;
    }
    if (m.stem != last_stem) {
      Checkpoint ckpt = load_checkpoint(ckpt_path.string());
      last_rows = ckpt.kind == Checkpoint::Kind::kGlow
                      ? score_clips_glow(ckpt, clips, aggregate)
                      : score_clips_vae(ckpt, clips, aggregate);
      last_stem = m.stem;
      fs::path csv = out / (m.stem + "_scores.csv");
      write_scores_csv(last_rows, csv.string());
      made.add(csv.string());
    }
    row.present = true;
    row.aucs = split_auc(last_rows, seen, unseen,
                         m.use_invariant ? invariant_score : full_nll_score);
    table.push_back(row);
  }

  fs::path csv = out / "eval_table.csv";
  fs::path txt = out / "eval_table.txt";
  write_method_table_csv(table, csv.string());
  write_method_table_txt(table, txt.string());
  made.add(csv.string());
  made.add(txt.string());
  write_config_snapshot(cfg, out / "eval_config.json", made);
  return made;
}

Artifacts run_velocity(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  Checkpoint ckpt = load_checkpoint(require_string(cfg, "checkpoint"));
  auto clips = read_feature_cache(require_string(cfg, "features"));
  DatasetManifest manifest = read_manifest(require_string(cfg, "manifest"));
  VelocityReport report = velocity_report(ckpt, clips, manifest.unseen_velocities);
  fs::path csv = out / "velocity_report.csv";
  write_velocity_csv(report, csv.string());
  made.add(csv.string());
  write_config_snapshot(cfg, out / "velocity_config.json", made);
  return made;
}

Artifacts run_report(const json& cfg) {
  Artifacts made;
  fs::path out = ensure_out_dir(cfg);
  fs::path scores_path(require_string(cfg, "scores"));
  std::string column = cfg.value("column", "invariant");
  auto rows = read_scores_csv(scores_path.string());
  auto score_of = column == "invariant" ? invariant_score : full_nll_score;
  if (column != "invariant" && column != "full_nll")
    throw ConfigError("report: column must be 'invariant' or 'full_nll'");
  auto summary = summarize_by_velocity(rows, score_of);
  std::string stem = scores_path.stem().string() + "_" + column;
  fs::path csv = out / (stem + "_by_velocity.csv");
  fs::path dat = out / (stem + "_by_velocity.dat");
  write_velocity_summary(summary, csv.string(), dat.string());
  made.add(csv.string());
  made.add(dat.string());
  write_config_snapshot(cfg, out / "report_config.json", made);
  return made;
}

Artifacts run_command(const std::string& command, const json& cfg) {
  if (command == "synth") return run_synth(cfg);
  if (command == "featurize") return run_featurize(cfg);
  if (command == "train") return run_train(cfg);
  if (command == "score") return run_score(cfg);
  if (command == "eval") return run_eval(cfg);
  if (command == "velocity") return run_velocity(cfg);
  if (command == "report") return run_report(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace nfad
