#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace synthlat {

/// Worker count: SYNTHLAT_THREADS caps it when set, otherwise the hardware
/// concurrency (at least 1).
inline int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  int budget = hw > 0 ? static_cast<int>(hw) : 1;
  if (const char* env = std::getenv("SYNTHLAT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < budget) budget = cap;
  }
  return budget;
}

/// Runs fn(i) for i in [0, n) across at most thread_budget() threads. Each
/// index is visited exactly once, so writes to disjoint slots stay
/// deterministic. Exceptions are rethrown on the calling thread.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(thread_budget(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace synthlat
