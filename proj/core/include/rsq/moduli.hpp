#pragma once

// Quantitative bounds for almost-supermartingales: moduli of uniform
// boundedness, learnable rates, liminf-moduli and metastable indices, together
// with the rules that compose them.
//
// Argument conventions: lambda is a confidence (failure probability), eps an
// accuracy, n an index. All bound objects are immutable and cheap to copy.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "rsq/iterate.hpp"
#include "rsq/node.hpp"

namespace rsq {

/// Failure probability lambda in (0,1).
class Confidence {
 public:
  explicit Confidence(double lambda);
  double value() const noexcept { return v_; }

 private:
  double v_;
};

/// Accuracy eps in (0,1).
class Accuracy {
 public:
  explicit Accuracy(double eps);
  double value() const noexcept { return v_; }

 private:
  double v_;
};

/// A natural number, or the marker that the true value exceeds `cap`.
class ExtendedIndex {
 public:
  static ExtendedIndex finite(std::uint64_t value, std::uint64_t cap = kDefaultSaturationCap);
  static ExtendedIndex saturated(std::uint64_t cap = kDefaultSaturationCap);
  /// Non-finite or above-cap values saturate; finite values are rounded up.
  static ExtendedIndex from_real(double value, std::uint64_t cap = kDefaultSaturationCap);

  bool is_saturated() const noexcept { return saturated_; }
  /// Throws std::logic_error when saturated.
  std::uint64_t value() const;
  std::uint64_t cap() const noexcept { return cap_; }
  /// Saturated indices compare above every finite index.
  bool exceeds(std::uint64_t n) const noexcept { return saturated_ || value_ > n; }
  std::string to_string() const;

  friend bool operator==(const ExtendedIndex&, const ExtendedIndex&) = default;

 private:
  ExtendedIndex(std::uint64_t v, bool sat, std::uint64_t cap) : value_(v), saturated_(sat), cap_(cap) {}
  std::uint64_t value_;
  bool saturated_;
  std::uint64_t cap_;
};

/// Shared state of every bound wrapper: the construction tree.
class BoundBase {
 public:
  const NodePtr& node() const noexcept { return node_; }
  const Node& provenance() const noexcept { return *node_; }
  nlohmann::json provenance_json() const { return to_json(*node_); }
  std::string explain() const { return render_tree(*node_); }

 protected:
  BoundBase(NodePtr node, std::size_t arity);
  NodePtr node_;
};

/// rho(lambda) with P(sup_n |X_n| >= rho(lambda)) < lambda.
class BoundednessModulus : public BoundBase {
 public:
  explicit BoundednessModulus(NodePtr node, bool at_least_one = false);

  static BoundednessModulus constant(double value, std::string tag = {});
  /// coef * lambda^exponent
  static BoundednessModulus power(double coef, double exponent, std::string tag = {});
  static BoundednessModulus custom(std::string name, std::function<double(double)> f,
                                   bool at_least_one = false);

  double operator()(Confidence lambda) const { return at(lambda.value()); }
  /// Unchecked evaluation; also used on refined grids below the standard one.
  double at(double lambda) const;
  double at(double lambda, EvalLog& log) const;
  /// True when the modulus is certified to take values >= 1.
  bool at_least_one() const noexcept { return at_least_one_; }

 private:
  bool at_least_one_;
};

/// phi(lambda, eps): bound on the index of a quiet window in any interval scheme.
class LearnableRate : public BoundBase {
 public:
  explicit LearnableRate(NodePtr node);

  static LearnableRate constant(double value, std::string tag = {});
  /// coef * lambda^p_lambda * eps^p_eps
  static LearnableRate power(double coef, double p_lambda, double p_eps, std::string tag = {});
  static LearnableRate custom(std::string name, std::function<double(double, double)> f);

  double operator()(Confidence lambda, Accuracy eps) const { return at(lambda.value(), eps.value()); }
  double at(double lambda, double eps) const;
};

/// phi(eps) for real sequences.
class DeterministicRate : public BoundBase {
 public:
  explicit DeterministicRate(NodePtr node);
  double operator()(Accuracy eps) const { return at(eps.value()); }
  double at(double eps) const;
};

/// A positive real function of one positive real argument, e.g. the mu of a
/// Robbins-Monro regression function.
class ScalarFunction : public BoundBase {
 public:
  explicit ScalarFunction(NodePtr node);
  /// coef * t^exponent
  static ScalarFunction power(double coef, double exponent, std::string tag = {});
  static ScalarFunction custom(std::string name, std::function<double(double)> f);
  double operator()(double t) const;
};

/// delta(eps, K): lower bound on V_n whenever eps <= X_n <= K.
class DriftModulus : public BoundBase {
 public:
  explicit DriftModulus(NodePtr node);
  /// delta(eps, K) = eps
  static DriftModulus identity();
  static DriftModulus custom(std::string name, std::function<double(double, double)> f);
  double operator()(Accuracy eps, double K) const { return at(eps.value(), K); }
  double at(double eps, double K) const;
};

/// r(n, x) with sum_{i=n}^{n+r(n,x)} u_i >= x.
class RateOfDivergence : public BoundBase {
 public:
  explicit RateOfDivergence(NodePtr node);

  /// Constant steps u: r(n, x) = ceil(x / u).
  static RateOfDivergence constant_step(double u);
  /// u_i = c (i+1)^-p with 0 < p <= 1, inverted through the integral bound.
  static RateOfDivergence power_schedule(double c, double p);
  /// Partial-sum scan over an arity-1 schedule node; throws past `max_terms`.
  static RateOfDivergence scan(NodePtr schedule, double max_terms = 1e8);

  /// Real-valued index (+inf when astronomically large).
  double at(double n, double x) const;
  ExtendedIndex operator()(std::uint64_t n, double x,
                           std::uint64_t cap = kDefaultSaturationCap) const;
};

/// Phi(lambda, eps, n): window length after n within which V drops below eps
/// except with probability < lambda.
class LiminfModulus : public BoundBase {
 public:
  explicit LiminfModulus(NodePtr node);
  double at(double lambda, double eps, double n) const;
  double at(double lambda, double eps, double n, EvalLog& log) const;
  ExtendedIndex operator()(Confidence lambda, Accuracy eps, std::uint64_t n,
                           std::uint64_t cap = kDefaultSaturationCap) const;
};

/// Index map g with shifted form g~(n) = n + g(n). Values above the cap saturate.
class Counterfunction : public BoundBase {
 public:
  explicit Counterfunction(NodePtr node);

  static Counterfunction zero();
  static Counterfunction constant(std::uint64_t c);
  /// g(n) = n
  static Counterfunction identity();
  /// g(n) = slope * n + offset
  static Counterfunction affine(std::uint64_t slope, std::uint64_t offset);
  static Counterfunction custom(std::string name, std::function<std::uint64_t(std::uint64_t)> f);

  ExtendedIndex operator()(std::uint64_t n, std::uint64_t cap = kDefaultSaturationCap) const;
  /// n + g(n), saturating at `cap`.
  ExtendedIndex shifted(std::uint64_t n, std::uint64_t cap = kDefaultSaturationCap) const;
};

// ---------------------------------------------------------------------------
// Constants

/// Universal constant of the supermartingale learnable rate.
inline constexpr double kSupermartingaleConstant = 200.0;
/// Constant of the simplified Robbins-Siegmund rate: 4096 c + 336. Each term of
/// the composite bound is dominated using rho, sigma >= 1 nonincreasing,
/// lambda, eps in (0,1) and K > 1.
inline constexpr double kClosedFormConstant = 4096.0 * kSupermartingaleConstant + 336.0;

/// Grid on which monotonicity of produced bounds is checked.
inline constexpr std::array<double, 5> kStandardGrid = {0.5, 0.25, 0.1, 0.05, 0.01};

// ---------------------------------------------------------------------------
// Sampled-grid property checks

bool is_nonincreasing(const BoundednessModulus& rho, std::span<const double> grid);
bool is_nonincreasing(const LearnableRate& phi, std::span<const double> grid);
/// Every value on the grid is >= 1.
bool is_at_least_one(const BoundednessModulus& rho, std::span<const double> grid);

// ---------------------------------------------------------------------------
// Monotone sequences and series

/// eps -> K / eps for nondecreasing sequences bounded by K.
DeterministicRate monotone_learnable(double K);

/// (lambda, eps) -> 2 rho(lambda/2) / (lambda eps) for pointwise nondecreasing
/// processes with modulus rho (also partial sums of nonnegative series).
LearnableRate learnable_from_boundedness(const BoundednessModulus& rho);

/// lambda -> a * phi_direct(lambda, eps) + eps for series with terms in [0, a].
BoundednessModulus boundedness_from_direct_rate(const LearnableRate& phi_direct, double a,
                                                Accuracy eps);

enum class Combine { sum, product };

/// Rate for X+Y (sum) or XY (product; needs moduli rho for X and sigma for Y).
LearnableRate combine_learnable(Combine mode, const LearnableRate& phi, const LearnableRate& psi,
                                const std::optional<BoundednessModulus>& rho = std::nullopt,
                                const std::optional<BoundednessModulus>& sigma = std::nullopt);

BoundednessModulus combine_boundedness(Combine mode, const BoundednessModulus& rho,
                                       const BoundednessModulus& sigma);

// ---------------------------------------------------------------------------
// Supermartingales and the Robbins-Siegmund theorem

/// c (K / (lambda eps))^2 for nonnegative supermartingales with E[U_0] < K, K > 1.
LearnableRate supermartingale_learnable(double K);

/// Intermediates of the composite Robbins-Siegmund rate.
struct RsPipeline {
  LearnableRate phi1;        // U_n
  BoundednessModulus chi1;   // U_n
  LearnableRate phi2;        // X_n / P_n
  BoundednessModulus chi2;   // X_n / P_n
  LearnableRate phi;         // X_n
};

/// Builds every intermediate from the composition lemmas. Rejects K <= 1 and
/// moduli that are not nonincreasing with values >= 1.
RsPipeline rs_pipeline(double K, const BoundednessModulus& rho, const BoundednessModulus& sigma);
LearnableRate rs_learnable_pipeline(double K, const BoundednessModulus& rho,
                                    const BoundednessModulus& sigma);

/// cbar (rho(lambda/8) (K + sigma(lambda/16)) / (lambda eps))^2.
LearnableRate rs_learnable_closed(double K, const BoundednessModulus& rho,
                                  const BoundednessModulus& sigma,
                                  double cbar = kClosedFormConstant);

/// Modulus for sum B_i: rho(lambda/2) * chi3(lambda/2), chi3(l) = 5 (K + sigma(l/4)) / l.
BoundednessModulus rs_bsum_boundedness(double K, const BoundednessModulus& rho,
                                       const BoundednessModulus& sigma);

/// Modulus for X_n: 9 (K + sigma(lambda/8)) rho(lambda/2) / lambda.
BoundednessModulus rs_x_boundedness(double K, const BoundednessModulus& rho,
                                    const BoundednessModulus& sigma);

struct NonstochasticBounds {
  DeterministicRate rate;  // eps -> 8 L (K + M) / eps
  double beta_sum_bound;   // L (K + M)
};

NonstochasticBounds nonstochastic_rs(double K, double L, double M);

// ---------------------------------------------------------------------------
// Metastability and the Robbins-Monro chain

/// g~^(ceil p)(0), or saturated once any iterate exceeds `cap`.
ExtendedIndex metastable_from_learnable(double p, const Counterfunction& g,
                                        std::uint64_t cap = kDefaultSaturationCap);

/// Phi(lambda, eps, n) = r(n, chi(lambda) / eps).
LiminfModulus liminf_modulus(const BoundednessModulus& chi, const RateOfDivergence& r);

/// Psi(lambda, eps, n) = Phi(lambda/2, delta(eps, tau(lambda/2)), n); accuracies
/// >= 1 are clamped just below 1 and reported through EvalLog.
LiminfModulus liminf_transfer(const LiminfModulus& Phi, const DriftModulus& delta,
                              const BoundednessModulus& tau);

/// delta(eps, K) = mu(sqrt(min{eps, 1/K})).
DriftModulus delta_from_mu(const ScalarFunction& mu);

/// f(j) = max{g(j), Psi(lambda/2, eps/2, j)}
Counterfunction rm_counterfunction(const LiminfModulus& Psi, Confidence lambda, Accuracy eps,
                                   const Counterfunction& g);

struct MetastableBound {
  ExtendedIndex gamma;
  Counterfunction f;  // the counterfunction whose orbit carries the witness
  NodePtr provenance;
};

/// Gamma(lambda, eps, g) = f~^(ceil phi(lambda/2, eps/2))(0).
MetastableBound rm_metastable(const LearnableRate& phi, const LiminfModulus& Psi,
                              Confidence lambda, Accuracy eps, const Counterfunction& g,
                              std::uint64_t cap = kDefaultSaturationCap);

/// Psi(lambda, eps, 0) for constant steps u and constant moduli rho = L,
/// sigma = M; equals ceil(20 L (K+M) / (u lambda delta(eps, tau(lambda/2)))).
ExtendedIndex constant_step_solution_bound(double K, double L, double M, double u,
                                           const DriftModulus& delta, Confidence lambda,
                                           Accuracy eps);

/// Tree of the bound above, for explain.
LiminfModulus constant_step_solution_modulus(double K, double L, double M, double u,
                                             const DriftModulus& delta);

}  // namespace rsq
