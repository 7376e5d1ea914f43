#include "robusta/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

namespace robusta {

int configure_threads_from_env() {
  if (const char* env = std::getenv("ROBUSTA_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // Ignore malformed values; OpenMP defaults apply.
    }
  }
  return thread_count();
}

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  Exec exec) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace robusta
