#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace hiemp {

/// Selects the OpenMP kernel or the serial reference loop. Both produce
/// bit-identical results; the serial path is kept for testing and benchmarks.
enum class Exec { serial, parallel };

/// Runs fn(i) for i in [0, count). Exceptions thrown by work items are
/// rethrown after the loop; the one from the lowest index wins.
template <typename Fn>
void for_each_index(Exec exec, std::ptrdiff_t count, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count > 0 ? count : 0));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hiemp
