#include "diffapprox/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include "diffapprox/errors.hpp"

namespace diffapprox {

unsigned default_thread_count() {
  if (const char* env = std::getenv("DIFFAPPROX_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<TaskFailure> parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                                        const Schedule& schedule) {
  if (!schedule.order.empty() && schedule.order.size() != count) {
    throw ConfigError("schedule: order must be a permutation of all " + std::to_string(count) + " tasks");
  }
  const unsigned wanted = schedule.threads == 0 ? default_thread_count() : schedule.threads;
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(wanted, std::max<std::size_t>(count, 1)));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::optional<TaskFailure> failure;

  auto work = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1, std::memory_order_relaxed);
      if (slot >= count) return;
      const std::size_t idx = schedule.order.empty() ? slot : schedule.order[slot];
      try {
        body(idx);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure || idx < failure->index) failure = TaskFailure{idx, std::current_exception()};
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return failure;
}

}  // namespace diffapprox
