#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace negmn {

// Runs fn(i) for i in [0, n) on `threads` workers with a static block
// partition. Tasks must be independent; output determinism is the caller's
// responsibility (index-addressed writes).
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
  if (threads < 1) threads = 1;
  if (threads == 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(threads));
  std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::int64_t lo = t * chunk;
    std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Fixed-shape pairwise summation; the reduction tree depends only on the
// length, so results are identical no matter how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Mean plus batch-means standard error over up to `max_batches` contiguous
// equal-length batches (trailing remainder excluded from the SE only).
inline MeanSe batch_mean_se(std::span<const double> v, int max_batches = 100) {
  MeanSe out;
  std::int64_t n = std::int64_t(v.size());
  if (n == 0) return out;
  out.mean = pairwise_sum(v) / double(n);
  int b = int(std::min<std::int64_t>(max_batches, n));
  if (b < 2) return out;
  std::int64_t len = n / b;
  std::vector<double> means(std::size_t(b), 0.0);
  for (int i = 0; i < b; ++i)
    means[std::size_t(i)] =
        pairwise_sum(v.subspan(std::size_t(i) * std::size_t(len), std::size_t(len))) /
        double(len);
  double grand = pairwise_sum(means) / double(b);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  // variance of the full-sample mean, estimated from batch spread
  out.se = std::sqrt(ss / (double(b) * double(b - 1)) * (double(b) * double(len) / double(n)));
  return out;
}

}  // namespace negmn
