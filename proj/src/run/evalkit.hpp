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

#ifndef NFAD_RUN_EVALKIT_HPP
#define NFAD_RUN_EVALKIT_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nfad {

// Per-clip scoring record; the row type of every evaluation report.
struct ScoredClip {
  std::string clip_id;
  double velocity = 0.0;
  bool anomalous = false;
  double score_invariant = 0.0;
  double score_full_nll = 0.0;
  double v_estimate = 0.0;  // NaN for unconstrained checkpoints
};

// Mann-Whitney statistic: fraction of (normal, anomalous) pairs where the
// anomalous score is higher; ties credited 0.5. Exact pairwise computation.
double auc(const std::vector<double>& normal_scores,
           const std::vector<double>& anomalous_scores);

struct SplitAuc {
  double seen = 0.0;
  double unseen = 0.0;
  double all = 0.0;
};

// AUC over rows restricted to the seen / unseen / full velocity subsets.
// `score_of` selects the score column. Every row's velocity must belong to
// exactly one of the two sets.
SplitAuc split_auc(const std::vector<ScoredClip>& rows,
                   const std::set<double>& seen_velocities,
                   const std::set<double>& unseen_velocities,
                   double (*score_of)(const ScoredClip&));

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

// One row of the method-comparison table; missing checkpoints yield
// rows with present=false.
struct MethodResult {
  std::string method;
  bool present = false;
  SplitAuc aucs;
};

void write_scores_csv(const std::vector<ScoredClip>& rows, const std::string& path);
std::vector<ScoredClip> read_scores_csv(const std::string& path);

void write_method_table_csv(const std::vector<MethodResult>& rows,
                            const std::string& path);
// Text table with the three AUC columns (percent), one row per method.
void write_method_table_txt(const std::vector<MethodResult>& rows,
                            const std::string& path);

// Velocity-estimation report: (velocity, estimate) pairs plus Pearson r.
struct VelocityReport {
  std::vector<std::pair<double, double>> pairs;  // (v, v_hat) per clip
  std::optional<double> pearson_r;               // nullopt: zero variance
};
void write_velocity_csv(const VelocityReport& report, const std::string& path);

// Per-velocity score summaries (mean/min/max per class), one gnuplot-friendly
// block per class, for the score-vs-velocity figures.
struct VelocitySummaryRow {
  double velocity = 0.0;
  bool anomalous = false;
  double mean = 0.0, min = 0.0, max = 0.0;
  int count = 0;
};
std::vector<VelocitySummaryRow> summarize_by_velocity(
    const std::vector<ScoredClip>& rows, double (*score_of)(const ScoredClip&));
void write_velocity_summary(const std::vector<VelocitySummaryRow>& summary,
                            const std::string& csv_path,
                            const std::string& gnuplot_path);

inline double invariant_score(const ScoredClip& r) { return r.score_invariant; }
inline double full_nll_score(const ScoredClip& r) { return r.score_full_nll; }

}  // namespace nfad

#endif  // NFAD_RUN_EVALKIT_HPP
