#include "rsq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsq {

std::uint64_t count_fluctuations(std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("rsq: eps must be positive");
  std::uint64_t count = 0;
  if (x.empty()) return 0;
  double lo = x[0];
  double hi = x[0];
  for (std::size_t j = 1; j < x.size(); ++j) {
    const double v = x[j];
    if (v - lo >= eps || hi - v >= eps) {
      ++count;
      lo = hi = v;  // the next pair may start at j
      continue;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return count;
}

CrossingCount count_crossings(std::span<const double> x, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("rsq: crossing interval needs a < b");
  enum class State { none, low, high } state = State::none;
  CrossingCount out;
  for (double v : x) {
    if (v < a) {
      if (state == State::high) {
        ++out.crossings;
        ++out.downcrossings;
      }
      state = State::low;
    } else if (v > b) {
      if (state == State::low) ++out.crossings;
      state = State::high;
    }
  }
  return out;
}

bool oscillation_event(std::span<const double> x, std::size_t first, std::size_t last, double eps) {
  if (first > last || x.empty()) return false;
  if (last >= x.size()) throw std::out_of_range("rsq: window exceeds the trace");
  const auto [lo, hi] = std::minmax_element(x.begin() + static_cast<std::ptrdiff_t>(first),
                                            x.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  return *hi - *lo >= eps;
}

double sup_over_horizon(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("rsq: empty trace");
  double m = std::abs(x[0]);
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::string to_string(CiMethod m) {
  switch (m) {
    case CiMethod::wilson:
      return "wilson";
    case CiMethod::hoeffding:
      return "hoeffding";
    case CiMethod::normal:
      return "normal";
  }
  return "?";
}

nlohmann::json Estimate::to_json() const {
  return {{"point", point}, {"ci_low", ci_low}, {"ci_high", ci_high}, {"n", n_samples},
          {"method", to_string(method)}};
}

Estimate wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw std::invalid_argument("rsq: estimate needs at least one sample");
  if (successes > n) throw std::invalid_argument("rsq: more successes than samples");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  Estimate e;
  e.point = p;
  e.ci_low = successes == 0 ? 0.0 : std::clamp(centre - half, 0.0, p);
  e.ci_high = successes == n ? 1.0 : std::clamp(centre + half, p, 1.0);
  e.n_samples = n;
  e.method = CiMethod::wilson;
  return e;
}

Estimate hoeffding_interval(std::size_t successes, std::size_t n, double alpha) {
  if (n == 0) throw std::invalid_argument("rsq: estimate needs at least one sample");
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  const double half = std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
  return {p, std::max(0.0, p - half), std::min(1.0, p + half), n, CiMethod::hoeffding};
}

Estimate normal_interval(std::span<const double> samples, double z) {
  if (samples.empty()) throw std::invalid_argument("rsq: estimate needs at least one sample");
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double half = z * sd / std::sqrt(n);
  return {mean, mean - half, mean + half, samples.size(), CiMethod::normal};
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  std::size_t first = workers;
  for (std::size_t w = 0; w < workers; ++w) {
    if (errors[w] && (first == workers || error_index[w] < error_index[first])) first = w;
  }
  if (first != workers) std::rethrow_exception(errors[first]);
}

Estimate probability_from_indicators(std::span<const char> hits, CiMethod method) {
  std::size_t k = 0;
  for (char h : hits) k += h ? 1 : 0;
  return method == CiMethod::hoeffding ? hoeffding_interval(k, hits.size())
                                       : wilson_interval(k, hits.size());
}

Estimate mc_probability(const ProcessFamily& family, const std::function<bool(const PathTrace&)>& event,
                        const McOptions& opt, CiMethod method) {
  if (opt.n_paths == 0) throw std::invalid_argument("rsq: n_paths must be at least 1");
  const auto hits = map_paths<char>(family, opt, [&](const PathTrace& t) -> char { return event(t) ? 1 : 0; });
  return probability_from_indicators(hits, method);
}

Estimate mc_expectation(const ProcessFamily& family,
                        const std::function<double(const PathTrace&)>& statistic, const McOptions& opt) {
  if (opt.n_paths == 0) throw std::invalid_argument("rsq: n_paths must be at least 1");
  const auto values = map_paths<double>(family, opt, statistic);
  return normal_interval(values);
}

}  // namespace rsq
