// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/synth/event_script.hpp"

#include <json.hpp>

#include "synclab/error.hpp"

namespace synclab::synth {

void EventScript::validate() const {
  if (!(duration_s > 0.0)) throw PreconditionError("script: duration must be positive");
  double prev = -1.0;
  for (const Event& e : events) {
    if (e.time_s < 0.0 || e.time_s > duration_s) {
      throw PreconditionError("script: event time " + std::to_string(e.time_s) + " outside clip");
    }
    if (e.time_s < prev) throw PreconditionError("script: event times not sorted");
    if (e.motion_lead_s < 0.0 || e.motion_lag_s < 0.0) {
      throw PreconditionError("script: negative motion lead/lag");
    }
    if (e.amplitude < 0.0 || e.amplitude > 1.0) throw PreconditionError("script: amplitude outside [0,1]");
    if (e.class_id < 1) throw PreconditionError("script: class ids start at 1");
    prev = e.time_s;
  }
}

std::string EventScript::to_json() const {
  nlohmann::json j;
  j["duration_s"] = duration_s;
  j["clip_class"] = clip_class;
  j["events"] = nlohmann::json::array();
  for (const Event& e : events) {
    j["events"].push_back({{"time_s", e.time_s},
                           {"class_id", e.class_id},
                           {"motion_lead_s", e.motion_lead_s},
                           {"motion_lag_s", e.motion_lag_s},
                           {"amplitude", e.amplitude}});
  }
  return j.dump(2);
}

EventScript EventScript::from_json(const std::string& text) {
  EventScript s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.duration_s = j.at("duration_s").get<double>();
    s.clip_class = j.value("clip_class", 1);
    for (const auto& e : j.at("events")) {
      s.events.push_back({e.at("time_s").get<double>(), e.at("class_id").get<int>(),
                          e.value("motion_lead_s", 0.0), e.value("motion_lag_s", 0.0),
                          e.value("amplitude", 1.0)});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("script json: ") + ex.what());
  }
  s.validate();
  return s;
}

}  // namespace synclab::synth
