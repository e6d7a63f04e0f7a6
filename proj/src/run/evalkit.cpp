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

#include "run/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "common.hpp"

namespace nfad {

double auc(const std::vector<double>& normal_scores,
           const std::vector<double>& anomalous_scores) {
  if (normal_scores.empty() || anomalous_scores.empty())
    throw ContractError("auc: both score lists must be nonempty");
  double credit = 0.0;
  for (double a : anomalous_scores)
    for (double n : normal_scores) {
      if (a > n)
        credit += 1.0;
      else if (a == n)
        credit += 0.5;
    }
  return credit /
         (static_cast<double>(normal_scores.size()) * anomalous_scores.size());
}

SplitAuc split_auc(const std::vector<ScoredClip>& rows,
                   const std::set<double>& seen_velocities,
                   const std::set<double>& unseen_velocities,
                   double (*score_of)(const ScoredClip&)) {
  std::vector<double> normal[3], anomalous[3];  // seen, unseen, all
  for (const ScoredClip& r : rows) {
    const bool seen = seen_velocities.count(r.velocity) > 0;
    const bool unseen = unseen_velocities.count(r.velocity) > 0;
    if (seen == unseen)
      throw DataError("split_auc: velocity " + std::to_string(r.velocity) +
                      " must belong to exactly one of the seen/unseen sets");
    const int subset = seen ? 0 : 1;
    (r.anomalous ? anomalous : normal)[subset].push_back(score_of(r));
    (r.anomalous ? anomalous : normal)[2].push_back(score_of(r));
  }
  SplitAuc out;
  out.seen = auc(normal[0], anomalous[0]);
  out.unseen = auc(normal[1], anomalous[1]);
  out.all = auc(normal[2], anomalous[2]);
  return out;
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty())
    throw ContractError("pearson: need equally sized, nonempty vectors");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // zero variance
  return sxy / std::sqrt(sxx * syy);
}

void write_scores_csv(const std::vector<ScoredClip>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("scores csv: cannot open " + path);
  f << "clip_id,velocity,anomalous,score_invariant,score_full_nll,v_estimate\n";
  char buf[256];
  for (const ScoredClip& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%g,%d,%.8g,%.8g,%.8g\n", r.clip_id.c_str(),
                  r.velocity, r.anomalous ? 1 : 0, r.score_invariant,
                  r.score_full_nll, r.v_estimate);
    f << buf;
  }
}

std::vector<ScoredClip> read_scores_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("scores csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line) ||
      line.rfind("clip_id,velocity,anomalous", 0) != 0)
    throw DataError("scores csv: missing header in " + path);
  std::vector<ScoredClip> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ScoredClip r;
    std::getline(ss, r.clip_id, ',');
    std::getline(ss, field, ',');
    r.velocity = std::stod(field);
    std::getline(ss, field, ',');
    r.anomalous = field == "1";
    std::getline(ss, field, ',');
    r.score_invariant = std::stod(field);
    std::getline(ss, field, ',');
    r.score_full_nll = std::stod(field);
    std::getline(ss, field, ',');
    r.v_estimate = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_method_table_csv(const std::vector<MethodResult>& rows,
                            const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("method table: cannot open " + path);
  f << "method,auc_seen,auc_unseen,auc_all\n";
  for (const MethodResult& r : rows) {
    if (r.present)
      f << r.method << "," << r.aucs.seen << "," << r.aucs.unseen << ","
        << r.aucs.all << "\n";
    else
      f << r.method << ",absent,absent,absent\n";
  }
}

void write_method_table_txt(const std::vector<MethodResult>& rows,
                            const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("method table: cannot open " + path);
  size_t width = 24;
  for (const MethodResult& r : rows) width = std::max(width, r.method.size() + 2);
  f << "AUCs (%) by velocity subset\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %10s %10s %10s\n", static_cast<int>(width),
                "Method", "Seen", "Unseen", "All");
  f << buf;
  f << std::string(width + 33, '-') << "\n";
  for (const MethodResult& r : rows) {
    if (r.present)
      std::snprintf(buf, sizeof(buf), "%-*s %10.1f %10.1f %10.1f\n",
                    static_cast<int>(width), r.method.c_str(), 100.0 * r.aucs.seen,
                    100.0 * r.aucs.unseen, 100.0 * r.aucs.all);
    else
      std::snprintf(buf, sizeof(buf), "%-*s %10s %10s %10s\n",
                    static_cast<int>(width), r.method.c_str(), "absent", "absent",
                    "absent");
    f << buf;
  }
}

void write_velocity_csv(const VelocityReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("velocity report: cannot open " + path);
  f << "velocity,estimate\n";
  for (auto [v, est] : report.pairs) f << v << "," << est << "\n";
  if (report.pearson_r)
    f << "# pearson_r," << *report.pearson_r << "\n";
  else
    f << "# pearson_r,undefined (zero variance)\n";
}

std::vector<VelocitySummaryRow> summarize_by_velocity(
    const std::vector<ScoredClip>& rows, double (*score_of)(const ScoredClip&)) {
  std::map<std::pair<double, bool>, std::vector<double>> groups;
  for (const ScoredClip& r : rows)
    groups[{r.velocity, r.anomalous}].push_back(score_of(r));
  std::vector<VelocitySummaryRow> out;
  for (auto& [key, scores] : groups) {
    VelocitySummaryRow row;
    row.velocity = key.first;
    row.anomalous = key.second;
    row.count = static_cast<int>(scores.size());
    row.min = *std::min_element(scores.begin(), scores.end());
    row.max = *std::max_element(scores.begin(), scores.end());
    double acc = 0.0;
    for (double s : scores) acc += s;
    row.mean = acc / static_cast<double>(scores.size());
    out.push_back(row);
  }
  return out;
}

void write_velocity_summary(const std::vector<VelocitySummaryRow>& summary,
                            const std::string& csv_path,
                            const std::string& gnuplot_path) {
  {
    std::ofstream f(csv_path);
    if (!f) throw IoError("velocity summary: cannot open " + csv_path);
    f << "velocity,anomalous,mean,min,max,count\n";
    for (const VelocitySummaryRow& r : summary)
      f << r.velocity << "," << (r.anomalous ? 1 : 0) << "," << r.mean << ","
        << r.min << "," << r.max << "," << r.count << "\n";
  }
  {
    // Two index blocks (normal, anomalous) for `plot ... index N`.
    std::ofstream f(gnuplot_path);
    if (!f) throw IoError("velocity summary: cannot open " + gnuplot_path);
    for (int anom = 0; anom < 2; ++anom) {
      f << "# " << (anom ? "anomalous" : "normal")
        << ": velocity mean min max\n";
      for (const VelocitySummaryRow& r : summary)
        if (r.anomalous == (anom == 1))
          f << r.velocity << " " << r.mean << " " << r.min << " " << r.max << "\n";
      f << "\n\n";
    }
  }
}

}  // namespace nfad
