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

#ifndef MELANOSCOPE_PARALLEL_H_
#define MELANOSCOPE_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

#include "absl/status/status.h"

namespace melanoscope {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
/// written by index. Returns the error of the lowest failing index, so the
/// outcome does not depend on scheduling.
template <typename Fn>
absl::Status ParallelFor(size_t n, int workers, Fn&& fn) {
  const size_t threads =
      std::min<size_t>(n, static_cast<size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) {
      absl::Status st = fn(i);
      if (!st.ok()) return st;
    }
    return absl::OkStatus();
  }
  std::vector<absl::Status> errors(n);
  std::atomic<size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          errors[i] = fn(i);
        }
      });
    }
  }
  for (auto& st : errors) {
    if (!st.ok()) return st;
  }
  return absl::OkStatus();
}

}  // namespace melanoscope

#endif  // MELANOSCOPE_PARALLEL_H_
