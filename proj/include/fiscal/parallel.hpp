#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace fiscal {

template <class T>
struct Outcome {
  std::optional<T> value;
  std::exception_ptr error;
};

/// Evaluates f(0..n-1) on up to `threads` workers (0 = hardware concurrency).
/// Results land at their own index, so the output never depends on scheduling.
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F&& f) -> std::vector<Outcome<std::invoke_result_t<F&, std::size_t>>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<Outcome<R>> out(n);
  auto run_one = [&](std::size_t i) {
    try {
      out[i].value.emplace(f(i));
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(threads, n);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) run_one(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace fiscal
