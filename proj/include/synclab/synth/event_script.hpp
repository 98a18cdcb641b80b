// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace synclab::synth {

// One sound-producing event. Motion may start lead seconds before the sound
// and continue lag seconds after it.
struct Event {
  double time_s = 0.0;
  int class_id = 1;
  double motion_lead_s = 0.0;
  double motion_lag_s = 0.0;
  double amplitude = 1.0;
};

struct EventScript {
  double duration_s = 2.0;
  // Clip-level class used as the conditioning label; 0 is reserved for null.
  int clip_class = 1;
  std::vector<Event> events;

  // Throws PreconditionError unless times lie in [0, duration], are sorted,
  // lead/lag are nonnegative and amplitudes lie in [0, 1].
  void validate() const;

  std::string to_json() const;
  static EventScript from_json(const std::string& text);
};

}  // namespace synclab::synth
