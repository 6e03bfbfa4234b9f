// Copyright 2026 The Melanoscope Authors. All Rights Reserved.
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

#ifndef MELANOSCOPE_LOGGING_H_
#define MELANOSCOPE_LOGGING_H_

#include <string>

#include "absl/status/status.h"

namespace melanoscope {

/// Sets log verbosity: trace, debug, info, warn, error, critical or off.
absl::Status SetLogLevel(const std::string& level);

/// Applies MELANOSCOPE_LOG if set; the default level is info. Logs go to
/// stderr.
absl::Status InitLoggingFromEnv();

}  // namespace melanoscope

#endif  // MELANOSCOPE_LOGGING_H_
