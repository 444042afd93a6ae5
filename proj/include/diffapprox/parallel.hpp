#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <vector>

namespace diffapprox {

// Worker count: DIFFAPPROX_THREADS if set and positive, else hardware concurrency.
unsigned default_thread_count();

struct Schedule {
  unsigned threads = 0;              // 0: default_thread_count()
  std::vector<std::size_t> order;    // permutation of [0, count); empty means ascending
};

struct TaskFailure {
  std::size_t index;
  std::exception_ptr error;
};

// Runs body(i) for every i in [0, count), dispatching indices in schedule order to a
// pool of workers. Returns the failure with the smallest index, if any; the other
// tasks still run to completion.
std::optional<TaskFailure> parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                                        const Schedule& schedule = {});

}  // namespace diffapprox
