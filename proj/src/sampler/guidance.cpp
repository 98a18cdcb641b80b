// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/sampler/guidance.hpp"

#include <cmath>
#include <string>

#include "synclab/error.hpp"

namespace synclab::sampler {

void GuidanceConfig::validate() const {
  if (steps < 1) throw PreconditionError("guidance: steps must be >= 1");
  if (!std::isfinite(w_audio) || !std::isfinite(w_text) || !std::isfinite(w_text_first)) {
    throw PreconditionError("guidance: weights must be finite");
  }
}

nlohmann::ordered_json to_json(const GuidanceConfig& g) {
  return {{"w_audio", g.w_audio}, {"w_text", g.w_text}, {"w_text_first", g.w_text_first}, {"steps", g.steps}};
}

GuidanceConfig guidance_from_json(const nlohmann::json& j) {
  GuidanceConfig g;
  if (j.contains("w_audio")) g.w_audio = j.at("w_audio").get<double>();
  if (j.contains("w_text")) g.w_text = j.at("w_text").get<double>();
  if (j.contains("w_text_first")) g.w_text_first = j.at("w_text_first").get<double>();
  if (j.contains("steps")) g.steps = j.at("steps").get<std::size_t>();
  g.validate();
  return g;
}

Tensor guided_prediction(const Tensor& pred_full, const Tensor& pred_offsync, const Tensor& pred_null,
                         double w_audio, double w_text) {
  if (pred_full.shape() != pred_offsync.shape() || pred_full.shape() != pred_null.shape()) {
    throw DimensionError("guided_prediction: shape mismatch " + shape_str(pred_full.shape()) + " vs " +
                         shape_str(pred_offsync.shape()) + " vs " + shape_str(pred_null.shape()));
  }
  const auto f = pred_full.data(), o = pred_offsync.data(), n = pred_null.data();
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    // Zero-weight terms are skipped so a zero weight never perturbs f, not
    // even the sign of a zero.
    double v = f[i];
    if (w_audio != 0.0) v += w_audio * (f[i] - o[i]);
    if (w_text != 0.0) v += w_text * (f[i] - n[i]);
    out[i] = v;
  }
  return Tensor(pred_full.shape(), std::move(out));
}

}  // namespace synclab::sampler
