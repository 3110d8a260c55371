// Copyright 2026 The PAPF Ballbot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "papf/control_mode.hpp"

#include <string>

#include "papf/error.hpp"

namespace papf {

std::string_view to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::kNoSharedControl: return "no-sc";
    case ControlMode::kPapfOnly: return "papf";
    case ControlMode::kPapfWithTracking: return "papf-tracking";
    case ControlMode::kPapfWithTrackingAndAlarm: return "papf-tracking-alarm";
  }
  return "unknown";
}

ControlMode parse_control_mode(std::string_view text) {
  if (text == "no-sc") return ControlMode::kNoSharedControl;
  if (text == "papf") return ControlMode::kPapfOnly;
  if (text == "papf-tracking") return ControlMode::kPapfWithTracking;
  if (text == "papf-tracking-alarm") return ControlMode::kPapfWithTrackingAndAlarm;
  throw ConfigError("unknown control mode '" + std::string(text) + "'", "mode");
}

}  // namespace papf
