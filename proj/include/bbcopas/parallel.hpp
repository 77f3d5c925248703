#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace bbcopas {

enum class ExecPolicy { serial, parallel };

// Evaluates f(i) for i in [0, n) into slot i. With ExecPolicy::parallel the
// loop runs under OpenMP; callers reduce the returned vector in index order,
// so results are bit-identical for any worker count. The exception from the
// lowest failing index is rethrown.
template <class T, class F>
std::vector<T> map_indexed(std::size_t n, ExecPolicy policy, F&& f) {
  std::vector<T> out(n);
  if (policy == ExecPolicy::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Sum in index order.
inline double ordered_sum(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

} // namespace bbcopas
