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

#ifndef MELANOSCOPE_SRC_BACKENDS_H_
#define MELANOSCOPE_SRC_BACKENDS_H_

#include <filesystem>
#include <memory>

#include "absl/status/statusor.h"
#include "melanoscope/classifier.h"

namespace melanoscope::internal {

absl::StatusOr<std::unique_ptr<Backend>> MakeMockBackend(
    const BackendDescriptor& descriptor);

absl::StatusOr<std::unique_ptr<Backend>> MakeOnnxBackend(
    const BackendDescriptor& descriptor, const std::filesystem::path& model);

}  // namespace melanoscope::internal

#endif  // MELANOSCOPE_SRC_BACKENDS_H_
