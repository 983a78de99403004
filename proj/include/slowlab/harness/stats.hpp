#ifndef SLOWLAB_HARNESS_STATS_HPP_
#define SLOWLAB_HARNESS_STATS_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace slowlab::harness {

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

Aggregate aggregate(std::span<const double> values);

struct TTest {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
  bool significant = false;  // p < 0.05
};

// Independent two-sample t-test with pooled variance.
TTest t_test(std::span<const double> a, std::span<const double> b);

std::uint64_t fnv1a64(const std::string& bytes);

// Runs body(i) for i in [0, n) on up to `threads` workers (0: hardware
// concurrency). Exceptions escaping body are rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace slowlab::harness

#endif  // SLOWLAB_HARNESS_STATS_HPP_
