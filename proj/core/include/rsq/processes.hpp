#pragma once

// Seeded process families with certified moduli.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsq/moduli.hpp"
#include "rsq/schedule.hpp"

namespace rsq {

/// One sampled path X_0..X_N with optional A, B, C, V tracks of the same length.
struct PathTrace {
  std::vector<double> x;
  std::vector<double> a, b, c, v;  // empty when the family has no such track
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  std::size_t clamp_events = 0;  // deterministic_rs only

  bool has_a() const noexcept { return !a.empty(); }
  bool has_b() const noexcept { return !b.empty(); }
  bool has_c() const noexcept { return !c.empty(); }
  bool has_v() const noexcept { return !v.empty(); }

  /// Throws std::logic_error when entries are negative or not finite, or
  /// when track lengths disagree.
  void validate() const;
};

/// CSV with columns n,x[,a][,b][,c][,v].
void write_trace_csv(std::ostream& os, const PathTrace& trace);

struct HypothesisFlags {
  bool is_supermartingale = false;
  bool is_rs = false;
  bool is_rm = false;
  bool is_deterministic = false;
};

/// Moduli that hold for the family by construction.
struct Certificate {
  double K = 2.0;            // K > E[X_0]
  double expected_x0 = 0.0;  // E[X_0]
  std::optional<BoundednessModulus> rho;
  std::optional<BoundednessModulus> sigma;
  std::optional<double> L;  // constant value of rho, when constant
  std::optional<double> M;  // constant value of sigma, when constant
  std::optional<Schedule> steps;
  std::optional<RateOfDivergence> r;
  std::optional<DriftModulus> delta;
  std::vector<std::string> notes;  // rejected certificates and the reason
};

using Sampler = std::function<PathTrace(std::uint64_t seed, std::size_t horizon)>;

class ProcessFamily {
 public:
  ProcessFamily(std::string kind, nlohmann::json parameters, Certificate certificate,
                HypothesisFlags flags, Sampler sampler);

  /// Pure in (seed, horizon); a longer horizon extends the shorter trace.
  PathTrace sample(std::uint64_t seed, std::size_t horizon) const { return sampler_(seed, horizon); }

  const std::string& kind() const noexcept { return kind_; }
  const nlohmann::json& parameters() const noexcept { return parameters_; }
  const Certificate& certificate() const noexcept { return certificate_; }
  const HypothesisFlags& flags() const noexcept { return flags_; }

  /// {kind, parameters, certificate summary, flags}
  nlohmann::json describe() const;

 private:
  std::string kind_;
  nlohmann::json parameters_;
  Certificate certificate_;
  HypothesisFlags flags_;
  Sampler sampler_;
};

/// Finite distribution {values[i] with probability probs[i]}.
struct FactorDistribution {
  std::vector<double> values;
  std::vector<double> probs;

  double mean() const;
  static FactorDistribution two_point(double lo, double hi);
  static FactorDistribution point(double v);
};

enum class NoiseKind { two_point, gaussian };

/// U_{n+1} = U_n xi_n with xi iid from `factors` (mean <= 1).
ProcessFamily multiplicative_supermartingale(double u0, const FactorDistribution& factors,
                                             std::optional<double> K = std::nullopt);

struct SgdQuadraticOptions {
  double x0 = 1.0;
  Schedule steps = Schedule::harmonic(1.0);
  double noise_sd = 1.0;
  NoiseKind noise = NoiseKind::two_point;
  /// Noise is switched off from this index on; makes constant steps certifiable.
  std::optional<std::uint64_t> noise_horizon;
  std::optional<double> K;
};

/// x_{n+1} = x_n - u_n (x_n + zeta_n), X_n = x_n^2.
ProcessFamily sgd_quadratic(const SgdQuadraticOptions& options);

struct GeneralRsOptions {
  Schedule a = Schedule::constant(0.0);
  Schedule cbar = Schedule::constant(0.0);
  /// Multiplicative martingale-difference noise: factor 1 +- eta, eta in [0, 1].
  double eta = 0.0;
  double x0 = 1.0;
  std::optional<double> K;
};

/// X_{n+1} = ((1 + a_n) X_n + C_n)(1 + eta s_n), C_n uniform on [0, cbar_n],
/// s_n = +-1; B_n = 0.
ProcessFamily general_rs(const GeneralRsOptions& options);

struct DeterministicRsOptions {
  Schedule alpha = Schedule::constant(0.0);
  /// nullopt selects the tight choice beta_n = alpha_n x_n + gamma_n.
  std::optional<Schedule> beta;
  Schedule gamma = Schedule::constant(0.0);
  double x0 = 0.5;
  std::optional<double> K;
  std::optional<double> L;
  std::optional<double> M;
};

/// x_{n+1} = (1 + alpha_n) x_n - beta_n + gamma_n, clamped at 0. Tracks a, b, c
/// hold alpha, the beta actually applied, and gamma.
ProcessFamily deterministic_rs(const DeterministicRsOptions& options);

/// Builds a family from a descriptor {"kind": ..., ...}; throws
/// std::invalid_argument on unknown kinds or bad parameters.
ProcessFamily family_from_json(const nlohmann::json& descriptor);

/// Names and one-line descriptions of the built-in families.
std::vector<std::pair<std::string, std::string>> family_catalog();

}  // namespace rsq
