#include "rsq/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rsq {

namespace {

void require_open_unit(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) {
    throw std::domain_error(std::string("rsq: ") + what + " must lie in (0,1), got " +
                            std::to_string(v));
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("rsq: ") + what + " must be positive and finite");
  }
}

NodePtr constant_node(double value, std::size_t arity, std::string tag) {
  return make_node("constant", arity, {{"value", value}}, {}, std::move(tag));
}

// Standard grid refined by the divisions (up to /16) the composite rules apply.
std::vector<double> refined_grid() {
  std::vector<double> g;
  for (double v : kStandardGrid) {
    for (double d = 1.0; d <= 16.0; d *= 2.0) g.push_back(v / d);
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

void check_rs_inputs(double K, const BoundednessModulus& rho, const BoundednessModulus& sigma) {
  if (!(K > 1.0) || !std::isfinite(K)) {
    throw std::invalid_argument("rsq: Robbins-Siegmund bounds need a finite K > 1");
  }
  const auto grid = refined_grid();
  for (const auto* m : {&rho, &sigma}) {
    const char* name = m == &rho ? "rho" : "sigma";
    if (!is_nonincreasing(*m, grid)) {
      throw std::invalid_argument(std::string("rsq: ") + name + " is not nonincreasing");
    }
    if (!is_at_least_one(*m, grid)) {
      throw std::invalid_argument(std::string("rsq: ") + name + " takes values below 1");
    }
  }
}

// Unvalidated builders shared by the checked entry points.
BoundednessModulus build_chi2(double K, const BoundednessModulus& sigma) {
  BoundednessModulus chi1(
      make_node("stopped_ville_boundedness", 1, {{"K", K}}, {sigma.node()},
                "chi1: modulus of uniform boundedness for U_n (Ville, stopped at T_sigma)"),
      true);
  return BoundednessModulus(
      make_node("boundedness_sum", 1, {}, {chi1.node(), sigma.node()},
                "chi2: modulus of uniform boundedness for X_n / P_n"),
      true);
}

BoundednessModulus build_bsum(double K, const BoundednessModulus& rho,
                              const BoundednessModulus& sigma) {
  auto chi3 = make_node("rs_chi3", 1, {{"K", K}}, {sigma.node()},
                        "chi3: modulus of uniform boundedness for sum B_i / P_(i+1)");
  return BoundednessModulus(make_node("boundedness_product", 1, {}, {rho.node(), chi3},
                                      "chi: modulus of uniform boundedness for sum B_i"),
                            true);
}

BoundednessModulus build_tau(double K, const BoundednessModulus& rho,
                             const BoundednessModulus& sigma) {
  auto chi2 = build_chi2(K, sigma);
  return BoundednessModulus(
      make_node("rs_x_boundedness", 1, {{"K", K}}, {rho.node(), sigma.node(), chi2.node()},
                "tau: modulus of uniform boundedness for X_n"),
      true);
}

}  // namespace

// --- value types -------------------------------------------------------------

Confidence::Confidence(double lambda) : v_(lambda) { require_open_unit(lambda, "lambda"); }
Accuracy::Accuracy(double eps) : v_(eps) { require_open_unit(eps, "eps"); }

ExtendedIndex ExtendedIndex::finite(std::uint64_t value, std::uint64_t cap) {
  if (value > cap) return saturated(cap);
  return ExtendedIndex(value, false, cap);
}

ExtendedIndex ExtendedIndex::saturated(std::uint64_t cap) { return ExtendedIndex(cap, true, cap); }

ExtendedIndex ExtendedIndex::from_real(double value, std::uint64_t cap) {
  if (std::isnan(value) || value < 0.0) {
    throw std::domain_error("rsq: index value must be nonnegative");
  }
  const double c = std::ceil(value);
  if (!std::isfinite(c) || c > static_cast<double>(cap)) return saturated(cap);
  return ExtendedIndex(static_cast<std::uint64_t>(c), false, cap);
}

std::uint64_t ExtendedIndex::value() const {
  if (saturated_) throw std::logic_error("rsq: value() of a saturated index");
  return value_;
}

std::string ExtendedIndex::to_string() const {
  if (saturated_) return "saturated(cap=" + std::to_string(cap_) + ")";
  return std::to_string(value_);
}

BoundBase::BoundBase(NodePtr node, std::size_t arity) : node_(std::move(node)) {
  if (!node_) throw std::invalid_argument("rsq: bound built from a null tree");
  if (node_->arity() != arity) {
    throw std::invalid_argument("rsq: tree of arity " + std::to_string(node_->arity()) +
                                " used where arity " + std::to_string(arity) + " is required");
  }
}

// --- BoundednessModulus -----------------------------------------------------

BoundednessModulus::BoundednessModulus(NodePtr node, bool at_least_one)
    : BoundBase(std::move(node), 1), at_least_one_(at_least_one) {}

BoundednessModulus BoundednessModulus::constant(double value, std::string tag) {
  if (std::isnan(value) || value < 0.0) {
    throw std::invalid_argument("rsq: a boundedness modulus is nonnegative");
  }
  return BoundednessModulus(constant_node(value, 1, std::move(tag)), value >= 1.0);
}

BoundednessModulus BoundednessModulus::power(double coef, double exponent, std::string tag) {
  return BoundednessModulus(
      make_node("power", 1, {{"coef", coef}, {"p0", exponent}}, {}, std::move(tag)),
      coef >= 1.0 && exponent <= 0.0);
}

BoundednessModulus BoundednessModulus::custom(std::string name, std::function<double(double)> f,
                                              bool at_least_one) {
  CustomFn fn = [f = std::move(f)](std::span<const double> a) { return f(a[0]); };
  return BoundednessModulus(make_node("custom", 1, {}, {}, std::move(name), {}, std::move(fn)),
                            at_least_one);
}

double BoundednessModulus::at(double lambda) const { return evaluate(*node_, {lambda}); }
double BoundednessModulus::at(double lambda, EvalLog& log) const {
  return evaluate(*node_, {lambda}, &log);
}

// --- LearnableRate ------------------------------------------------------------

LearnableRate::LearnableRate(NodePtr node) : BoundBase(std::move(node), 2) {}

LearnableRate LearnableRate::constant(double value, std::string tag) {
  return LearnableRate(constant_node(value, 2, std::move(tag)));
}

LearnableRate LearnableRate::power(double coef, double p_lambda, double p_eps, std::string tag) {
  return LearnableRate(make_node("power", 2, {{"coef", coef}, {"p0", p_lambda}, {"p1", p_eps}},
                                 {}, std::move(tag)));
}

LearnableRate LearnableRate::custom(std::string name, std::function<double(double, double)> f) {
  CustomFn fn = [f = std::move(f)](std::span<const double> a) { return f(a[0], a[1]); };
  return LearnableRate(make_node("custom", 2, {}, {}, std::move(name), {}, std::move(fn)));
}

double LearnableRate::at(double lambda, double eps) const {
  return evaluate(*node_, {lambda, eps});
}

// --- DeterministicRate --------------------------------------------------------

DeterministicRate::DeterministicRate(NodePtr node) : BoundBase(std::move(node), 1) {}
double DeterministicRate::at(double eps) const { return evaluate(*node_, {eps}); }

// --- ScalarFunction -------------------------------------------------------------

ScalarFunction::ScalarFunction(NodePtr node) : BoundBase(std::move(node), 1) {}

ScalarFunction ScalarFunction::power(double coef, double exponent, std::string tag) {
  return ScalarFunction(
      make_node("power", 1, {{"coef", coef}, {"p0", exponent}}, {}, std::move(tag)));
}

ScalarFunction ScalarFunction::custom(std::string name, std::function<double(double)> f) {
  CustomFn fn = [f = std::move(f)](std::span<const double> a) { return f(a[0]); };
  return ScalarFunction(make_node("custom", 1, {}, {}, std::move(name), {}, std::move(fn)));
}

double ScalarFunction::operator()(double t) const { return evaluate(*node_, {t}); }

// --- DriftModulus ----------------------------------------------------------------

DriftModulus::DriftModulus(NodePtr node) : BoundBase(std::move(node), 2) {}

DriftModulus DriftModulus::identity() {
  return DriftModulus(
      make_node("power", 2, {{"coef", 1.0}, {"p0", 1.0}}, {}, "identity drift delta(eps,K)=eps"));
}

DriftModulus DriftModulus::custom(std::string name, std::function<double(double, double)> f) {
  CustomFn fn = [f = std::move(f)](std::span<const double> a) { return f(a[0], a[1]); };
  return DriftModulus(make_node("custom", 2, {}, {}, std::move(name), {}, std::move(fn)));
}

double DriftModulus::at(double eps, double K) const { return evaluate(*node_, {eps, K}); }

// --- RateOfDivergence --------------------------------------------------------------

RateOfDivergence::RateOfDivergence(NodePtr node) : BoundBase(std::move(node), 2) {}

RateOfDivergence RateOfDivergence::constant_step(double u) {
  require_positive(u, "constant step size");
  return RateOfDivergence(make_node("divergence_constant", 2, {{"u", u}}, {},
                                    "rate of divergence for constant steps"));
}

RateOfDivergence RateOfDivergence::power_schedule(double c, double p) {
  require_positive(c, "step coefficient");
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("rsq: sum c (n+1)^-p diverges only for p <= 1");
  }
  return RateOfDivergence(make_node("divergence_power", 2, {{"c", c}, {"p", p}}, {},
                                    "rate of divergence via integral bound"));
}

RateOfDivergence RateOfDivergence::scan(NodePtr schedule, double max_terms) {
  return RateOfDivergence(make_node("divergence_scan", 2, {{"cap", max_terms}},
                                    {std::move(schedule)},
                                    "rate of divergence by partial-sum scan"));
}

double RateOfDivergence::at(double n, double x) const { return evaluate(*node_, {n, x}); }

ExtendedIndex RateOfDivergence::operator()(std::uint64_t n, double x, std::uint64_t cap) const {
  return ExtendedIndex::from_real(at(static_cast<double>(n), x), cap);
}

// --- LiminfModulus -------------------------------------------------------------------

LiminfModulus::LiminfModulus(NodePtr node) : BoundBase(std::move(node), 3) {}

double LiminfModulus::at(double lambda, double eps, double n) const {
  return evaluate(*node_, {lambda, eps, n});
}

double LiminfModulus::at(double lambda, double eps, double n, EvalLog& log) const {
  return evaluate(*node_, {lambda, eps, n}, &log);
}

ExtendedIndex LiminfModulus::operator()(Confidence lambda, Accuracy eps, std::uint64_t n,
                                        std::uint64_t cap) const {
  return ExtendedIndex::from_real(at(lambda.value(), eps.value(), static_cast<double>(n)), cap);
}

// --- Counterfunction -----------------------------------------------------------------

Counterfunction::Counterfunction(NodePtr node) : BoundBase(std::move(node), 1) {}

Counterfunction Counterfunction::zero() { return constant(0); }

Counterfunction Counterfunction::constant(std::uint64_t c) {
  return Counterfunction(constant_node(static_cast<double>(c), 1, "g(n)=" + std::to_string(c)));
}

Counterfunction Counterfunction::identity() {
  return Counterfunction(
      make_node("affine", 1, {{"slope", 1.0}, {"offset", 0.0}}, {}, "g(n)=n"));
}

Counterfunction Counterfunction::affine(std::uint64_t slope, std::uint64_t offset) {
  return Counterfunction(make_node(
      "affine", 1, {{"slope", static_cast<double>(slope)}, {"offset", static_cast<double>(offset)}},
      {}, "g(n)=" + std::to_string(slope) + "n+" + std::to_string(offset)));
}

Counterfunction Counterfunction::custom(std::string name,
                                        std::function<std::uint64_t(std::uint64_t)> f) {
  CustomFn fn = [f = std::move(f)](std::span<const double> a) {
    return static_cast<double>(f(static_cast<std::uint64_t>(a[0])));
  };
  return Counterfunction(make_node("custom", 1, {}, {}, std::move(name), {}, std::move(fn)));
}

ExtendedIndex Counterfunction::operator()(std::uint64_t n, std::uint64_t cap) const {
  return ExtendedIndex::from_real(evaluate(*node_, {static_cast<double>(n)}), cap);
}

ExtendedIndex Counterfunction::shifted(std::uint64_t n, std::uint64_t cap) const {
  const auto g = (*this)(n, cap);
  if (g.is_saturated() || g.value() > cap - std::min(n, cap)) return ExtendedIndex::saturated(cap);
  return ExtendedIndex::finite(n + g.value(), cap);
}

// --- grid checks -------------------------------------------------------------------------

namespace {
std::vector<double> sorted_copy(std::span<const double> grid) {
  std::vector<double> g(grid.begin(), grid.end());
  std::sort(g.begin(), g.end());
  return g;
}
}  // namespace

bool is_nonincreasing(const BoundednessModulus& rho, std::span<const double> grid) {
  const auto g = sorted_copy(grid);
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (rho.at(g[i]) > rho.at(g[i - 1])) return false;
  }
  return true;
}

bool is_nonincreasing(const LearnableRate& phi, std::span<const double> grid) {
  const auto g = sorted_copy(grid);
  for (double fixed : g) {
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (phi.at(g[i], fixed) > phi.at(g[i - 1], fixed)) return false;
      if (phi.at(fixed, g[i]) > phi.at(fixed, g[i - 1])) return false;
    }
  }
  return true;
}

bool is_at_least_one(const BoundednessModulus& rho, std::span<const double> grid) {
  return std::all_of(grid.begin(), grid.end(), [&](double l) { return rho.at(l) >= 1.0; });
}

// --- section 2 -------------------------------------------------------------------------

DeterministicRate monotone_learnable(double K) {
  require_positive(K, "K");
  return DeterministicRate(make_node("monotone_learnable", 1, {{"K", K}}, {},
                                     "learnable rate for a monotone bounded sequence"));
}

LearnableRate learnable_from_boundedness(const BoundednessModulus& rho) {
  return LearnableRate(make_node("learnable_from_boundedness", 2, {}, {rho.node()},
                                 "learnable rate for a nondecreasing process"));
}

BoundednessModulus boundedness_from_direct_rate(const LearnableRate& phi_direct, double a,
                                                Accuracy eps) {
  require_positive(a, "per-term bound a");
  return BoundednessModulus(
      make_node("boundedness_from_direct_rate", 1, {{"a", a}, {"eps", eps.value()}},
                {phi_direct.node()}, "modulus of uniform boundedness from a direct rate"),
      false);
}

LearnableRate combine_learnable(Combine mode, const LearnableRate& phi, const LearnableRate& psi,
                                const std::optional<BoundednessModulus>& rho,
                                const std::optional<BoundednessModulus>& sigma) {
  if (mode == Combine::sum) {
    return LearnableRate(make_node("learnable_sum", 2, {}, {phi.node(), psi.node()},
                                   "learnable rate for a sum"));
  }
  if (!rho || !sigma) {
    throw std::invalid_argument(
        "rsq: product of learnable rates needs moduli of uniform boundedness for both factors");
  }
  return LearnableRate(make_node("learnable_product", 2, {},
                                 {phi.node(), psi.node(), rho->node(), sigma->node()},
                                 "learnable rate for a product"));
}

BoundednessModulus combine_boundedness(Combine mode, const BoundednessModulus& rho,
                                       const BoundednessModulus& sigma) {
  const bool floor = rho.at_least_one() && sigma.at_least_one();
  if (mode == Combine::sum) {
    return BoundednessModulus(make_node("boundedness_sum", 1, {}, {rho.node(), sigma.node()},
                                        "modulus of uniform boundedness for a sum"),
                              rho.at_least_one() || sigma.at_least_one());
  }
  return BoundednessModulus(make_node("boundedness_product", 1, {}, {rho.node(), sigma.node()},
                                      "modulus of uniform boundedness for a product"),
                            floor);
}

// --- section 3 --------------------------------------------------------------------------

LearnableRate supermartingale_learnable(double K) {
  if (!(K > 1.0) || !std::isfinite(K)) {
    throw std::invalid_argument("rsq: supermartingale rate needs a finite K > 1");
  }
  return LearnableRate(make_node("supermartingale_learnable", 2,
                                 {{"K", K}, {"c", kSupermartingaleConstant}}, {},
                                 "learnable rate for a nonnegative supermartingale"));
}

RsPipeline rs_pipeline(double K, const BoundednessModulus& rho, const BoundednessModulus& sigma) {
  check_rs_inputs(K, rho, sigma);
  LearnableRate phi1(make_node("stopped_supermartingale_learnable", 2,
                               {{"K", K}, {"c", kSupermartingaleConstant}}, {sigma.node()},
                               "phi1: learnable rate for U_n"));
  BoundednessModulus chi1(
      make_node("stopped_ville_boundedness", 1, {{"K", K}}, {sigma.node()},
                "chi1: modulus of uniform boundedness for U_n (Ville, stopped at T_sigma)"),
      true);
  BoundednessModulus chi2(make_node("boundedness_sum", 1, {}, {chi1.node(), sigma.node()},
                                    "chi2: modulus of uniform boundedness for X_n / P_n"),
                          true);
  // partial sums of C_i / P_(i+1) are monotone with modulus sigma
  LearnableRate c_sums = learnable_from_boundedness(sigma);
  LearnableRate phi2(make_node("learnable_sum", 2, {}, {phi1.node(), c_sums.node()},
                               "phi2: learnable rate for X_n / P_n"));
  LearnableRate p_rate = learnable_from_boundedness(rho);
  LearnableRate phi(make_node("learnable_product", 2, {},
                              {phi2.node(), p_rate.node(), chi2.node(), rho.node()},
                              "phi: learnable rate of uniform convergence for X_n"));
  return RsPipeline{phi1, chi1, phi2, chi2, phi};
}

LearnableRate rs_learnable_pipeline(double K, const BoundednessModulus& rho,
                                    const BoundednessModulus& sigma) {
  return rs_pipeline(K, rho, sigma).phi;
}

LearnableRate rs_learnable_closed(double K, const BoundednessModulus& rho,
                                  const BoundednessModulus& sigma, double cbar) {
  check_rs_inputs(K, rho, sigma);
  require_positive(cbar, "cbar");
  return LearnableRate(make_node("rs_learnable_closed", 2, {{"K", K}, {"cbar", cbar}},
                                 {rho.node(), sigma.node()},
                                 "learnable rate of uniform convergence for X_n (closed form)"));
}

BoundednessModulus rs_bsum_boundedness(double K, const BoundednessModulus& rho,
                                       const BoundednessModulus& sigma) {
  check_rs_inputs(K, rho, sigma);
  return build_bsum(K, rho, sigma);
}

BoundednessModulus rs_x_boundedness(double K, const BoundednessModulus& rho,
                                    const BoundednessModulus& sigma) {
  check_rs_inputs(K, rho, sigma);
  return build_tau(K, rho, sigma);
}

NonstochasticBounds nonstochastic_rs(double K, double L, double M) {
  require_positive(K, "K");
  require_positive(L, "L");
  require_positive(M, "M");
  DeterministicRate rate(make_node("nonstochastic_rate", 1, {{"K", K}, {"L", L}, {"M", M}}, {},
                                   "learnable rate for the nonstochastic recurrence"));
  return NonstochasticBounds{rate, L * (K + M)};
}

// --- section 4 ----------------------------------------------------------------------------

ExtendedIndex metastable_from_learnable(double p, const Counterfunction& g, std::uint64_t cap) {
  auto node = make_node("metastable_iterate", 0, {{"p", p}, {"cap", static_cast<double>(cap)}},
                        {g.node()}, "metastable rate from a learnable rate");
  return ExtendedIndex::from_real(evaluate(*node, std::span<const double>{}), cap);
}

LiminfModulus liminf_modulus(const BoundednessModulus& chi, const RateOfDivergence& r) {
  return LiminfModulus(make_node("liminf_from_divergence", 3, {}, {chi.node(), r.node()},
                                 "liminf-modulus for V_n"));
}

LiminfModulus liminf_transfer(const LiminfModulus& Phi, const DriftModulus& delta,
                              const BoundednessModulus& tau) {
  return LiminfModulus(make_node("liminf_transfer", 3, {},
                                 {Phi.node(), delta.node(), tau.node()},
                                 "liminf-modulus for X_n"));
}

DriftModulus delta_from_mu(const ScalarFunction& mu) {
  return DriftModulus(make_node("drift_from_mu", 2, {}, {mu.node()},
                                "drift modulus mu(sqrt(min{eps,1/K}))"));
}

Counterfunction rm_counterfunction(const LiminfModulus& Psi, Confidence lambda, Accuracy eps,
                                   const Counterfunction& g) {
  return Counterfunction(make_node("rm_counterfunction", 1,
                                   {{"lambda", lambda.value()}, {"eps", eps.value()}},
                                   {g.node(), Psi.node()}, "f(j)=max{g(j), Psi(l/2,e/2,j)}"));
}

MetastableBound rm_metastable(const LearnableRate& phi, const LiminfModulus& Psi,
                              Confidence lambda, Accuracy eps, const Counterfunction& g,
                              std::uint64_t cap) {
  auto f = rm_counterfunction(Psi, lambda, eps, g);
  auto node = make_node(
      "rm_metastable", 0,
      {{"lambda", lambda.value()}, {"eps", eps.value()}, {"cap", static_cast<double>(cap)}},
      {phi.node(), f.node()}, "Gamma: metastable bound for X_n -> 0");
  const double v = evaluate(*node, std::span<const double>{});
  return MetastableBound{ExtendedIndex::from_real(v, cap), f, node};
}

LiminfModulus constant_step_solution_modulus(double K, double L, double M, double u,
                                             const DriftModulus& delta) {
  require_positive(K, "K");
  require_positive(L, "L");
  require_positive(M, "M");
  auto rho = BoundednessModulus::constant(L, "rho = L");
  auto sigma = BoundednessModulus::constant(M, "sigma = M");
  auto Phi = liminf_modulus(build_bsum(K, rho, sigma), RateOfDivergence::constant_step(u));
  return liminf_transfer(Phi, delta, build_tau(K, rho, sigma));
}

ExtendedIndex constant_step_solution_bound(double K, double L, double M, double u,
                                           const DriftModulus& delta, Confidence lambda,
                                           Accuracy eps) {
  return constant_step_solution_modulus(K, L, M, u, delta)(lambda, eps, 0);
}

}  // namespace rsq
