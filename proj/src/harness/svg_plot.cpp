// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/harness/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "synclab/error.hpp"
#include "synclab/metrics/report.hpp"

namespace synclab::harness {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) { return metrics::fmt_fixed(v, 2); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step for about five ticks over [lo, hi].
double tick_step(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

std::string tick_label(double v, double step) {
  const int digits = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  return metrics::fmt_fixed(v, std::min(digits, 6));
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  std::size_t points = 0;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw PreconditionError("emit_plot: series '" + s.label + "' has unequal x/y");
    points += s.x.size();
  }
  if (points == 0) throw PreconditionError("emit_plot: nothing to plot");

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) throw PreconditionError("emit_plot: non-finite value");
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (spec.kind == PlotKind::kBar) {
    ymin = std::min(ymin, 0.0);
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double ystep = tick_step(ymin, ymax);
  ymin = std::floor(ymin / ystep) * ystep;
  ymax = std::ceil(ymax / ystep) * ystep;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(spec.title) +
       "</text>\n";
  // Axes.
  o += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
       num(kTop + ph) + "\" stroke=\"black\"/>\n";
  o += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(kTop + ph) +
       "\" stroke=\"black\"/>\n";
  const int ny = static_cast<int>(std::lround((ymax - ymin) / ystep));
  for (int i = 0; i <= ny; ++i) {
    const double v = ymin + i * ystep;
    o += "<line x1=\"" + num(kLeft - 4) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
         num(py(v)) + "\" stroke=\"#dddddd\"/>\n";
    o += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" +
         tick_label(v, ystep) + "</text>\n";
  }
  if (spec.kind == PlotKind::kBar && !spec.categories.empty()) {
    for (std::size_t i = 0; i < spec.categories.size(); ++i) {
      o += "<text x=\"" + num(px(static_cast<double>(i))) + "\" y=\"" + num(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + escape(spec.categories[i]) + "</text>\n";
    }
  } else {
    const double xstep = tick_step(xmin, xmax);
    const double first = std::ceil(xmin / xstep - 1e-9) * xstep;
    for (double v = first; v <= xmax + 1e-9 * xstep; v += xstep) {
      o += "<text x=\"" + num(px(v)) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
           tick_label(v, xstep) + "</text>\n";
    }
  }
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 15) + "\" text-anchor=\"middle\">" +
       escape(spec.x_label) + "</text>\n";
  o += "<text transform=\"translate(18 " + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(spec.y_label) + "</text>\n";

  const std::size_t ns = spec.series.size();
  for (std::size_t s = 0; s < ns; ++s) {
    const Series& ser = spec.series[s];
    const char* color = kColors[s % std::size(kColors)];
    if (spec.kind == PlotKind::kLine) {
      if (ser.x.size() > 1) {
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
          o += (i ? " " : "") + num(px(ser.x[i])) + "," + num(py(ser.y[i]));
        }
        o += "\"/>\n";
      }
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        o += "<circle cx=\"" + num(px(ser.x[i])) + "\" cy=\"" + num(py(ser.y[i])) + "\" r=\"3.5\" fill=\"" + color +
             "\"/>\n";
      }
    } else {
      const double slot = pw / (xmax - xmin) * 0.8;
      const double bw = slot / static_cast<double>(ns);
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        const double x0 = px(ser.x[i]) - slot / 2 + bw * static_cast<double>(s);
        const double y0 = py(std::max(ser.y[i], 0.0)), y1 = py(std::min(ser.y[i], 0.0));
        o += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(bw) + "\" height=\"" + num(y1 - y0) +
             "\" fill=\"" + color + "\"/>\n";
      }
    }
    const double ly = kTop + 10 + 20 * static_cast<double>(s);
    o += "<rect x=\"" + num(kLeft + pw + 15) + "\" y=\"" + num(ly - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
         color + "\"/>\n";
    o += "<text x=\"" + num(kLeft + pw + 32) + "\" y=\"" + num(ly + 1) + "\">" + escape(ser.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

void emit_plot(const PlotSpec& spec, const std::filesystem::path& path) {
  metrics::write_text(path, render_svg(spec));
}

}  // namespace synclab::harness
