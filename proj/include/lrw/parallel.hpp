#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace lrw {

enum class Exec { serial, parallel };

/// Runs f(i) for i in [0, n). Each call must write only to its own slot, so
/// the result does not depend on thread scheduling. The first exception (by
/// index) is rethrown after the loop.
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Sets the OpenMP team size for subsequent parallel loops (0 keeps the
/// runtime default).
void set_workers(int workers);

}  // namespace lrw
