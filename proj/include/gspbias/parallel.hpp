// Copyright 2026 The gspbias Authors
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

#ifndef GSPBIAS_PARALLEL_HPP_
#define GSPBIAS_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gspbias {

// Resolves a requested worker count; zero means hardware concurrency.
inline int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Calls fn(task) for task in [0, num_tasks) on up to `threads` workers.
// Tasks are claimed dynamically, so fn must write only to task-owned state;
// callers merge results in task order afterwards. The first exception is
// rethrown on the calling thread.
template <class Fn>
void ParallelFor(std::int64_t num_tasks, int threads, Fn&& fn) {
  const int workers =
      static_cast<int>(std::min<std::int64_t>(std::max(1, threads), num_tasks));
  if (workers <= 1) {
    for (std::int64_t t = 0; t < num_tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::int64_t t = next.fetch_add(1); t < num_tasks; t = next.fetch_add(1)) {
          try {
            fn(t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(num_tasks);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gspbias

#endif  // GSPBIAS_PARALLEL_HPP_
