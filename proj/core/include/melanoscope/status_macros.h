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

#ifndef MELANOSCOPE_STATUS_MACROS_H_
#define MELANOSCOPE_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define MELANOSCOPE_CONCAT_INNER_(a, b) a##b
#define MELANOSCOPE_CONCAT_(a, b) MELANOSCOPE_CONCAT_INNER_(a, b)

/// Returns early from the enclosing function if `expr` yields a non-OK
/// absl::Status.
#define MELANOSCOPE_RETURN_IF_ERROR(expr)                  \
  do {                                                     \
    const absl::Status _melanoscope_status = (expr);       \
    if (!_melanoscope_status.ok()) return _melanoscope_status; \
  } while (0)

#define MELANOSCOPE_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                       \
  if (!tmp.ok()) return tmp.status();                       \
  lhs = std::move(tmp).value()

/// Evaluates `rexpr` (an absl::StatusOr<T>), returning its status on error and
/// otherwise move-assigning the value into `lhs` (which may be a declaration).
#define MELANOSCOPE_ASSIGN_OR_RETURN(lhs, rexpr) \
  MELANOSCOPE_ASSIGN_OR_RETURN_IMPL_(            \
      MELANOSCOPE_CONCAT_(_melanoscope_statusor_, __LINE__), lhs, rexpr)

#endif  // MELANOSCOPE_STATUS_MACROS_H_
