#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace wkde {

//! Thread count from WKDE_THREADS, else the hardware concurrency.
inline int default_threads()
{
  if (const char* env = std::getenv("WKDE_THREADS")) {
    try {
      int t = std::stoi(env);
      if (t > 0)
        return t;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

//! Runs f(i) for i in [0, n) over `threads` workers with static contiguous
//! chunks. Results must be written per index; the first exception (lowest
//! chunk) is rethrown.
template<class F>
void parallel_for(std::size_t n, int threads, F&& f)
{
  const std::size_t t = std::min<std::size_t>(std::max(threads, 1), n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(t);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t w = 0; w < t; ++w) {
    const std::size_t lo = n * w / t, hi = n * (w + 1) / t;
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (std::size_t i = lo; i < hi; ++i)
          f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool)
    th.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace wkde
