#pragma once

#include <cstddef>
#include <exception>
#include <limits>

namespace fracvar {

/// Selects the OpenMP kernel or the serial reference loop. Both run the same
/// per-index body, so results are bit-identical between the two.
enum class Exec { serial, parallel };

inline constexpr Exec default_exec = Exec::parallel;

/// Runs body(i) for i in [0, count). An exception thrown by the body is
/// carried out of the parallel region; when several indices throw, the one
/// with the smallest index wins so the error is the same in both modes.
template <class Body>
void for_each_index(std::size_t count, Exec exec, Body&& body) {
  const auto n = static_cast<long long>(count);
  if (exec == Exec::serial) {
    for (long long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  std::exception_ptr error;
  long long error_index = std::numeric_limits<long long>::max();
#pragma omp parallel for schedule(dynamic, 8)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(fracvar_exec_error)
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace fracvar
