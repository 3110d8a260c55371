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

#ifndef PAPF_CONTROL_MODE_HPP_
#define PAPF_CONTROL_MODE_HPP_

#include <string_view>

namespace papf {

enum class ControlMode {
  kNoSharedControl,           // v_cmd = v_usr
  kPapfOnly,                  // repulsion and filter, no velocity tracking
  kPapfWithTracking,          // full pipeline
  kPapfWithTrackingAndAlarm,  // full pipeline plus proximity alarm
};

// "no-sc", "papf", "papf-tracking", "papf-tracking-alarm".
std::string_view to_string(ControlMode mode);
// Accepts the names above. Throws ConfigError.
ControlMode parse_control_mode(std::string_view text);

}  // namespace papf

#endif  // PAPF_CONTROL_MODE_HPP_
