#pragma once

// Monte-Carlo certification of bounds against process families.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsq/estimators.hpp"
#include "rsq/moduli.hpp"
#include "rsq/processes.hpp"

namespace rsq {

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

/// Verdict for the claim "true value < bound": pass iff ci_high < bound, fail
/// iff ci_low > bound, inconclusive otherwise (ties included).
Verdict verdict_below(const Estimate& e, double bound);

struct Repro {
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t horizon = 0;
  nlohmann::json parameters = nlohmann::json::object();
};

struct VerificationReport {
  std::string claim;
  double bound = 0.0;
  bool bound_saturated = false;
  Estimate estimate;
  Verdict verdict = Verdict::inconclusive;
  Repro repro;
  nlohmann::json details = nlohmann::json::object();
  nlohmann::json provenance;  // construction tree of the bound, when known
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  /// claim,bound,point,ci_low,ci_high,n_paths,horizon,seed,verdict
  std::string csv_row() const;
  static std::string csv_header();
};

/// Shortest round-trip decimal form.
std::string format_number(double v);

struct VerifyOptions {
  std::size_t n_paths = 2000;
  std::size_t horizon = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Longest horizon a liminf or metastable check may simulate.
  std::size_t max_horizon = std::size_t{1} << 22;
  /// Candidates scanned along an orbit by verify_metastable.
  std::size_t max_candidates = 64;
  /// Bounds up to this value are scanned exhaustively by verify_metastable.
  std::size_t exhaustive_limit = 4096;

  McOptions mc() const { return {n_paths, horizon, seed, threads}; }
};

/// Windows [a_k; b_k] with a_k < b_k <= a_{k+1}.
class IntervalScheme {
 public:
  using Window = std::pair<std::size_t, std::size_t>;

  IntervalScheme(std::string name, std::vector<Window> windows);

  /// [0;1], [1;2], [2;4], ..., [2^k; 2^{k+1}] up to the horizon.
  static IntervalScheme dyadic(std::size_t horizon);
  /// [kw; (k+1)w] up to the horizon.
  static IntervalScheme sliding(std::size_t width, std::size_t horizon);
  /// Adversarial surrogate: from a = 0, picks the smallest b whose pilot-run
  /// frequency of an eps-oscillation on [a; b] reaches `threshold`, then
  /// continues from b. The remainder of the horizon becomes the last window.
  static IntervalScheme greedy_pilot(const ProcessFamily& family, double eps, double threshold,
                                     const McOptions& pilot);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Window>& windows() const noexcept { return windows_; }
  bool empty() const noexcept { return windows_.empty(); }

 private:
  std::string name_;
  std::vector<Window> windows_;
};

/// P(sup_{n <= horizon} |X_n| >= rho(lambda)) < lambda.
VerificationReport verify_boundedness(const ProcessFamily& family, const BoundednessModulus& rho,
                                      Confidence lambda, const VerifyOptions& opt);

/// Some window n <= phi(lambda, eps) has oscillation probability < lambda, and
/// at most phi windows carry probability >= lambda.
VerificationReport verify_learnable(const ProcessFamily& family, const LearnableRate& phi,
                                    Confidence lambda, Accuracy eps, const IntervalScheme& scheme,
                                    const VerifyOptions& opt);

enum class Track { x, v };

/// P(for all k in [n; n + Phi(lambda, eps, n)]: track_k >= eps) < lambda.
/// The horizon is set by the window; opt.horizon is ignored.
VerificationReport verify_liminf(const ProcessFamily& family, const LiminfModulus& Phi,
                                 Confidence lambda, Accuracy eps, std::uint64_t start_n,
                                 const VerifyOptions& opt, Track track = Track::v);

/// Some n <= bound has P(exists k in [n; n + g(n)]: X_k >= eps) < lambda.
/// Candidates follow the orbit of `scan` from 0 (default: g); bounds up to
/// opt.exhaustive_limit are scanned index by index.
VerificationReport verify_metastable(const ProcessFamily& family, const ExtendedIndex& bound,
                                     Confidence lambda, Accuracy eps, const Counterfunction& g,
                                     const VerifyOptions& opt,
                                     const std::optional<Counterfunction>& scan = std::nullopt);

/// E[C_horizon[a, b]] <= 2 p E[U_0] / M + 1 on each of the p cells of [0, M].
VerificationReport verify_crossing_inequality(const ProcessFamily& family, double M, std::size_t p,
                                              const VerifyOptions& opt);

/// P(sum_{i < horizon} B_i >= chi(lambda)) < lambda.
VerificationReport verify_bsum(const ProcessFamily& family, const BoundednessModulus& chi,
                               Confidence lambda, const VerifyOptions& opt);

/// P(for all k <= N: X_k >= eps) < lambda, i.e. an eps-solution is found by N
/// with probability > 1 - lambda.
VerificationReport verify_solution_bound(const ProcessFamily& family, const ExtendedIndex& N,
                                         Confidence lambda, Accuracy eps, const VerifyOptions& opt);

/// Deterministic check on a single trace: J_eps <= 8 L (K + M) / eps and
/// sum_{i < horizon} beta_i < L (K + M).
VerificationReport verify_nonstochastic(const ProcessFamily& family, Accuracy eps,
                                        const VerifyOptions& opt);

}  // namespace rsq
