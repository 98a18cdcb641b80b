// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace synclab::metrics {

struct SyncRow {
  std::string clip_id;
  std::string metric;
  double delay_s = 0.0;
  double score = 0.0;  // in [0, 1]
  std::size_t n_peaks_ref = 0;
  std::size_t n_peaks_rec = 0;
};

struct Aggregate {
  std::string metric;
  double delay_s = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;   // sample standard deviation
  double ci95 = 0.0;  // 1.96 * std / sqrt(n)
  // Percent change of mean vs the same metric at delay 0 (0 when absent).
  double rel_change_pct = 0.0;
};

Aggregate aggregate_scores(const std::vector<double>& scores);

struct SyncReport {
  std::vector<SyncRow> rows;
  std::vector<Aggregate> aggregates;

  // Groups rows by (metric, delay) in first-appearance order and fills
  // aggregates, including the relative change against delay 0.
  void aggregate();

  const Aggregate* find(const std::string& metric, double delay_s) const;

  // clip_id,metric,delay_s,score_x100
  std::string to_csv() const;
  nlohmann::ordered_json aggregate_json() const;

  void write(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) const;
};

// Fixed-precision number formatting shared by every CSV writer.
std::string fmt_fixed(double v, int digits = 6);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace synclab::metrics
