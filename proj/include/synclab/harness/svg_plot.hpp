// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace synclab::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

enum class PlotKind { kLine, kBar };

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  PlotKind kind = PlotKind::kLine;
  std::vector<Series> series;
  // Bar plots label each x position with these names (optional).
  std::vector<std::string> categories;
};

// Self-contained SVG. Output bytes depend only on the spec; numbers are
// printed at fixed precision. Throws PreconditionError on an empty plot.
std::string render_svg(const PlotSpec& spec);

void emit_plot(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace synclab::harness
