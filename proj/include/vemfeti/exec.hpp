#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace vemfeti {

/// Execution policy for the data-parallel kernels. `serial` is the reference path.
enum class Exec { serial, parallel };

/// Runs fn(i) for i in [0, n). Under Exec::parallel the loop is an OpenMP
/// worksharing loop; the first exception thrown by any iteration is rethrown
/// on the calling thread once the loop has finished.
template <class Fn>
void for_each_index(Exec exec, std::ptrdiff_t n, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int max_threads();

}  // namespace vemfeti
