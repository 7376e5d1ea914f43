#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace robusta {

/// Kernels come in two flavours: a plain serial loop kept as the reference,
/// and an OpenMP loop. Both must produce bit-identical results.
enum class Exec { Serial, Parallel };

/// Caps OpenMP parallelism at $ROBUSTA_THREADS when set. Returns the
/// resulting thread count.
int configure_threads_from_env();
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Each index must write only its own outputs;
/// with that discipline Serial and Parallel agree bitwise. The exception from
/// the lowest failing index is rethrown after the loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  Exec exec = Exec::Parallel);

}  // namespace robusta
