#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsq/moduli.hpp"

namespace rsq {

/// Deterministic nonnegative sequence used for step sizes u_n and for the
/// A_n, C_n, alpha_n, beta_n, gamma_n schedules of the process families.
class Schedule {
 public:
  enum class Kind { constant, harmonic, power, geometric, explicit_list };

  /// u_n = u
  static Schedule constant(double u);
  /// u_n = c / (n+1)
  static Schedule harmonic(double c);
  /// u_n = c (n+1)^-p
  static Schedule power(double c, double p);
  /// u_n = c q^n
  static Schedule geometric(double c, double q);
  /// u_n = values[min(n, size-1)]; the last entry repeats forever.
  static Schedule explicit_list(std::vector<double> values);

  double operator()(std::uint64_t n) const noexcept;
  Kind kind() const noexcept { return kind_; }

  /// sum_{i>=0} u_i when finite.
  std::optional<double> sum() const;
  /// sum_{i>=0} u_i^2 when finite.
  std::optional<double> sum_of_squares() const;
  /// sum_{i<n} u_i^2, computed exactly in closed form or by summation.
  double partial_sum_of_squares(std::uint64_t n) const;
  /// An upper bound on prod_{i>=0} (1 + u_i) when finite (tight for geometric
  /// and finite explicit schedules).
  std::optional<double> product_one_plus() const;
  /// max_{i<n} u_i
  double max_before(std::uint64_t n) const;

  /// r(n, x) when sum u_i diverges; nullopt for summable schedules.
  std::optional<RateOfDivergence> rate_of_divergence(double max_scan_terms = 1e8) const;
  /// Arity-1 tree evaluating the schedule (used by partial-sum scans).
  NodePtr node() const;

  nlohmann::json to_json() const;
  /// {"kind": "constant"|"harmonic"|"power"|"geometric"|"explicit", ...}
  static Schedule from_json(const nlohmann::json& j);
  std::string describe() const;

 private:
  Schedule(Kind kind, double c, double p, std::vector<double> values);
  Kind kind_;
  double c_;
  double p_;  // exponent for power, ratio for geometric
  std::vector<double> values_;
};

}  // namespace rsq
