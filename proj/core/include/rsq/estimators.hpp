#pragma once

// Path statistics and Monte-Carlo estimates.

#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsq/processes.hpp"
#include "rsq/rng.hpp"

namespace rsq {

struct CrossingCount {
  std::uint64_t crossings = 0;      // C: completed crossings in either direction
  std::uint64_t downcrossings = 0;  // D
};

/// Maximum number of pairs i1<j1 <= i2<j2 <= ... with |x_i - x_j| >= eps
/// (greedy earliest completion).
std::uint64_t count_fluctuations(std::span<const double> x, double eps);

/// Crossings of [a, b] with strict boundaries: a value < a is "low", > b is
/// "high"; values inside [a, b] leave the state unchanged.
CrossingCount count_crossings(std::span<const double> x, double a, double b);

/// max - min over x[first..last] >= eps; false for an empty window.
bool oscillation_event(std::span<const double> x, std::size_t first, std::size_t last, double eps);

/// max_n |x_n|; throws on an empty trace.
double sup_over_horizon(std::span<const double> x);

enum class CiMethod { wilson, hoeffding, normal };

std::string to_string(CiMethod m);

struct Estimate {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_samples = 0;
  CiMethod method = CiMethod::wilson;

  double halfwidth() const noexcept { return 0.5 * (ci_high - ci_low); }
  nlohmann::json to_json() const;
};

/// Two-sided 3-sigma intervals (confidence 99.73%).
inline constexpr double kCiZ = 3.0;

Estimate wilson_interval(std::size_t successes, std::size_t n, double z = kCiZ);
Estimate hoeffding_interval(std::size_t successes, std::size_t n, double alpha = 0.0027);
/// mean +- z * sd / sqrt(n) with the sample standard deviation.
Estimate normal_interval(std::span<const double> samples, double z = kCiZ);

struct McOptions {
  std::size_t n_paths = 2000;
  std::size_t horizon = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Runs body(i) for i in [0, n) on `threads` workers; rethrows the first
/// exception by index order.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Applies `stat` to every sampled path; result i belongs to path_seed(seed, i)
/// regardless of the thread count.
template <class T>
std::vector<T> map_paths(const ProcessFamily& family, const McOptions& opt,
                         const std::function<T(const PathTrace&)>& stat) {
  std::vector<T> out(opt.n_paths);
  parallel_for(opt.n_paths, opt.threads, [&](std::size_t i) {
    out[i] = stat(family.sample(path_seed(opt.seed, i), opt.horizon));
  });
  return out;
}

/// Frequency of `event` with a Wilson (or Hoeffding) interval.
Estimate mc_probability(const ProcessFamily& family, const std::function<bool(const PathTrace&)>& event,
                        const McOptions& opt, CiMethod method = CiMethod::wilson);

/// Mean of `statistic` with a normal interval.
Estimate mc_expectation(const ProcessFamily& family,
                        const std::function<double(const PathTrace&)>& statistic, const McOptions& opt);

/// Estimate from precomputed indicators (index order).
Estimate probability_from_indicators(std::span<const char> hits, CiMethod method = CiMethod::wilson);

}  // namespace rsq
