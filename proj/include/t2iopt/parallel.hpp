#pragma once

#include <cstddef>
#include <future>
#include <type_traits>
#include <vector>

namespace t2iopt {

/// Runs fn(0..n-1) concurrently and returns the results in index order.
/// Every task is joined before the first stored exception is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::future<R>> futures;
  futures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, [&fn, i] { return fn(i); }));
  for (auto& f : futures) f.wait();
  std::vector<R> out;
  out.reserve(n);
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace t2iopt
