// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/metrics/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <utility>

#include "synclab/error.hpp"

namespace synclab::metrics {

std::string fmt_fixed(double v, int digits) {
  if (v == 0.0) v = 0.0;  // no "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) s = std::string(buf + (buf[0] == '-'));
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

Aggregate aggregate_scores(const std::vector<double>& scores) {
  Aggregate a;
  a.n = scores.size();
  if (a.n == 0) return a;
  double sum = 0.0;
  for (double s : scores) sum += s;
  a.mean = sum / static_cast<double>(a.n);
  if (a.n > 1) {
    double ss = 0.0;
    for (double s : scores) ss += (s - a.mean) * (s - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(a.n - 1));
    a.ci95 = 1.96 * a.std / std::sqrt(static_cast<double>(a.n));
  }
  return a;
}

void SyncReport::aggregate() {
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.metric, r.delay_s);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.score);
  }
  aggregates.clear();
  for (const auto& key : order) {
    Aggregate a = aggregate_scores(groups[key]);
    a.metric = key.first;
    a.delay_s = key.second;
    aggregates.push_back(a);
  }
  for (auto& a : aggregates) {
    const Aggregate* base = find(a.metric, 0.0);
    if (base != nullptr && base->mean > 0.0) a.rel_change_pct = 100.0 * (a.mean - base->mean) / base->mean;
  }
}

const Aggregate* SyncReport::find(const std::string& metric, double delay_s) const {
  for (const auto& a : aggregates) {
    if (a.metric == metric && std::abs(a.delay_s - delay_s) < 1e-9) return &a;
  }
  return nullptr;
}

std::string SyncReport::to_csv() const {
  std::string out = "clip_id,metric,delay_s,score_x100\n";
  for (const auto& r : rows) {
    out += r.clip_id + "," + r.metric + "," + fmt_fixed(r.delay_s, 3) + "," + fmt_fixed(100.0 * r.score, 4) + "\n";
  }
  return out;
}

nlohmann::ordered_json SyncReport::aggregate_json() const {
  auto arr = nlohmann::ordered_json::array();
  // Rounded so the JSON bytes do not depend on last-bit float formatting.
  auto r6 = [](double v) { return std::round(v * 1e6) / 1e6 + 0.0; };
  for (const auto& a : aggregates) {
    arr.push_back({{"metric", a.metric},
                   {"delay", r6(a.delay_s)},
                   {"n", a.n},
                   {"mean", r6(100.0 * a.mean)},
                   {"std", r6(100.0 * a.std)},
                   {"ci95", r6(100.0 * a.ci95)},
                   {"rel_change_pct", r6(a.rel_change_pct)}});
  }
  return arr;
}

void SyncReport::write(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) const {
  write_text(csv_path, to_csv());
  write_text(json_path, aggregate_json().dump(2) + "\n");
}

}  // namespace synclab::metrics
