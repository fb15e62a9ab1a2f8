#include "rsq/processes.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rsq/rng.hpp"

namespace rsq {

namespace {

// Relative slack added to certificates whose underlying sum or product is
// deterministic, so that the strict inequality P(. >= rho) < lambda holds.
constexpr double kCertificateSlack = 1.0 + 1e-12;

void require_finite_nonneg(double v, const std::string& what) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::invalid_argument("rsq: " + what + " must be finite and nonnegative");
  }
}

double resolve_K(std::optional<double> K, double expected_x0) {
  if (!K) return std::max(expected_x0, 1.0) + 1.0;
  if (!(*K > expected_x0) || !std::isfinite(*K)) {
    throw std::invalid_argument("rsq: certificate K must exceed E[X_0]");
  }
  return *K;
}

nlohmann::json summarize(const std::optional<BoundednessModulus>& m) {
  if (!m) return nullptr;
  const Node& n = m->provenance();
  if (n.rule() == "constant") return n.param("value");
  return n.tag().empty() ? std::string(n.rule()) : n.tag();
}

}  // namespace

void PathTrace::validate() const {
  const auto check = [&](const std::vector<double>& t, const char* name) {
    if (t.empty()) return;
    if (t.size() != x.size()) throw std::logic_error(std::string("rsq: track ") + name + " length mismatch");
    for (double v : t) {
      if (!std::isfinite(v) || v < 0.0) {
        throw std::logic_error(std::string("rsq: track ") + name + " has a negative or non-finite entry");
      }
    }
  };
  check(x, "x");
  check(a, "a");
  check(b, "b");
  check(c, "c");
  check(v, "v");
  if (x.size() != horizon + 1) throw std::logic_error("rsq: trace length differs from horizon + 1");
}

void write_trace_csv(std::ostream& os, const PathTrace& t) {
  os << "n,x";
  if (t.has_a()) os << ",a";
  if (t.has_b()) os << ",b";
  if (t.has_c()) os << ",c";
  if (t.has_v()) os << ",v";
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t n = 0; n < t.x.size(); ++n) {
    os << n << ',' << t.x[n];
    if (t.has_a()) os << ',' << t.a[n];
    if (t.has_b()) os << ',' << t.b[n];
    if (t.has_c()) os << ',' << t.c[n];
    if (t.has_v()) os << ',' << t.v[n];
    os << '\n';
  }
  os.precision(old);
}

ProcessFamily::ProcessFamily(std::string kind, nlohmann::json parameters, Certificate certificate,
                             HypothesisFlags flags, Sampler sampler)
    : kind_(std::move(kind)),
      parameters_(std::move(parameters)),
      certificate_(std::move(certificate)),
      flags_(flags),
      sampler_(std::move(sampler)) {}

nlohmann::json ProcessFamily::describe() const {
  const auto& c = certificate_;
  nlohmann::json cert = {
      {"K", c.K},
      {"expected_x0", c.expected_x0},
      {"rho", summarize(c.rho)},
      {"sigma", summarize(c.sigma)},
      {"steps", c.steps ? nlohmann::json(c.steps->describe()) : nlohmann::json(nullptr)},
      {"r", c.r.has_value()},
      {"delta", c.delta ? nlohmann::json(c.delta->provenance().tag()) : nlohmann::json(nullptr)},
      {"notes", c.notes},
  };
  if (c.L) cert["L"] = *c.L;
  if (c.M) cert["M"] = *c.M;
  return {{"kind", kind_},
          {"parameters", parameters_},
          {"certificate", cert},
          {"flags",
           {{"is_supermartingale", flags_.is_supermartingale},
            {"is_rs", flags_.is_rs},
            {"is_rm", flags_.is_rm},
            {"is_deterministic", flags_.is_deterministic}}}};
}

double FactorDistribution::mean() const {
  return std::inner_product(values.begin(), values.end(), probs.begin(), 0.0);
}

FactorDistribution FactorDistribution::two_point(double lo, double hi) {
  return {{lo, hi}, {0.5, 0.5}};
}

FactorDistribution FactorDistribution::point(double v) { return {{v}, {1.0}}; }

ProcessFamily multiplicative_supermartingale(double u0, const FactorDistribution& factors,
                                             std::optional<double> K) {
  require_finite_nonneg(u0, "u0");
  if (factors.values.empty() || factors.values.size() != factors.probs.size()) {
    throw std::invalid_argument("rsq: factor distribution needs matching values and probs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < factors.values.size(); ++i) {
    require_finite_nonneg(factors.values[i], "factor value");
    require_finite_nonneg(factors.probs[i], "factor probability");
    total += factors.probs[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("rsq: factor probabilities must sum to 1");
  if (factors.mean() > 1.0 + 1e-15) throw std::invalid_argument("rsq: factor mean exceeds 1");

  std::vector<double> cumulative(factors.probs.size());
  std::partial_sum(factors.probs.begin(), factors.probs.end(), cumulative.begin());
  cumulative.back() = 2.0;  // the last value absorbs rounding

  Certificate cert;
  cert.expected_x0 = u0;
  cert.K = resolve_K(K, u0);
  cert.rho = BoundednessModulus::constant(1.0, "rho = 1 (A = 0)");
  cert.sigma = BoundednessModulus::constant(1.0, "sigma = 1 (C = 0)");
  cert.L = 1.0;
  cert.M = 1.0;

  HypothesisFlags flags;
  flags.is_supermartingale = true;
  flags.is_rs = true;

  nlohmann::json params = {{"u0", u0},
                           {"factors", {{"values", factors.values}, {"probs", factors.probs}}},
                           {"K", cert.K}};

  Sampler sampler = [u0, values = factors.values, cumulative](std::uint64_t seed, std::size_t horizon) {
    PathTrace t;
    t.seed = seed;
    t.horizon = horizon;
    t.x.resize(horizon + 1);
    CounterRng rng(seed);
    double u = u0;
    t.x[0] = u;
    for (std::size_t n = 0; n < horizon; ++n) {
      const double w = rng.uniform();
      std::size_t k = 0;
      while (w >= cumulative[k]) ++k;
      u *= values[k];
      t.x[n + 1] = u;
    }
    return t;
  };
  return ProcessFamily("multiplicative_supermartingale", std::move(params), std::move(cert), flags,
                       std::move(sampler));
}

ProcessFamily sgd_quadratic(const SgdQuadraticOptions& o) {
  if (!std::isfinite(o.x0)) throw std::invalid_argument("rsq: x0 must be finite");
  require_finite_nonneg(o.noise_sd, "noise_sd");
  const Schedule steps = o.steps;
  // growing schedules are also checked per step inside the sampler
  if (steps(0) > 1.0) throw std::domain_error("rsq: step sizes must lie in [0, 1]");

  const double X0 = o.x0 * o.x0;
  const double s = o.noise_sd;
  Certificate cert;
  cert.expected_x0 = X0;
  cert.K = resolve_K(o.K, X0);
  cert.rho = BoundednessModulus::constant(1.0, "rho = 1 (A = 0)");
  cert.L = 1.0;
  cert.steps = steps;
  cert.delta = DriftModulus::identity();

  std::optional<double> c_total;
  if (s == 0.0) {
    c_total = 0.0;
  } else if (o.noise_horizon) {
    c_total = s * s * steps.partial_sum_of_squares(*o.noise_horizon);
  } else if (auto sq = steps.sum_of_squares()) {
    c_total = s * s * *sq;
  }
  if (c_total) {
    const double value = *c_total * kCertificateSlack;
    cert.sigma = BoundednessModulus::constant(value, "sigma = s^2 sum u_i^2");
    cert.M = value;
  } else {
    cert.notes.push_back("sigma rejected: sum of C_n = s^2 u_n^2 diverges");
  }
  try {
    cert.r = steps.rate_of_divergence();
  } catch (const std::exception& e) {
    cert.notes.push_back(std::string("r rejected: ") + e.what());
  }
  if (!cert.r) cert.notes.push_back("r rejected: step sizes are summable");

  HypothesisFlags flags;
  flags.is_rs = cert.sigma.has_value();
  flags.is_rm = flags.is_rs && cert.r.has_value();

  nlohmann::json params = {{"x0", o.x0},
                           {"steps", steps.to_json()},
                           {"noise_sd", s},
                           {"noise", o.noise == NoiseKind::gaussian ? "gaussian" : "two_point"},
                           {"K", cert.K}};
  if (o.noise_horizon) params["noise_horizon"] = *o.noise_horizon;

  const std::uint64_t noise_end = o.noise_horizon.value_or(UINT64_MAX);
  Sampler sampler = [x0 = o.x0, steps, s, noise = o.noise, noise_end](std::uint64_t seed,
                                                                      std::size_t horizon) {
    PathTrace t;
    t.seed = seed;
    t.horizon = horizon;
    t.x.resize(horizon + 1);
    t.a.assign(horizon + 1, 0.0);
    t.b.resize(horizon + 1);
    t.c.resize(horizon + 1);
    t.v.resize(horizon + 1);
    CounterRng rng(seed);
    double x = x0;
    for (std::size_t n = 0;; ++n) {
      const double u = steps(n);
      if (u > 1.0) throw std::domain_error("rsq: step size above 1 at index " + std::to_string(n));
      const bool noisy = s > 0.0 && n < noise_end;
      const double X = x * x;
      t.x[n] = X;
      t.b[n] = u * (2.0 - u) * X;
      t.c[n] = noisy ? u * u * s * s : 0.0;
      t.v[n] = (2.0 - u) * X;
      if (n == horizon) break;
      double zeta = 0.0;
      if (noisy) zeta = noise == NoiseKind::gaussian ? s * rng.normal() : (rng.uniform() < 0.5 ? -s : s);
      x -= u * (x + zeta);
    }
    return t;
  };
  return ProcessFamily("sgd_quadratic", std::move(params), std::move(cert), flags, std::move(sampler));
}

ProcessFamily general_rs(const GeneralRsOptions& o) {
  require_finite_nonneg(o.x0, "x0");
  if (!(o.eta >= 0.0 && o.eta <= 1.0)) throw std::invalid_argument("rsq: eta must lie in [0, 1]");
  const auto prod = o.a.product_one_plus();
  if (!prod) throw std::invalid_argument("rsq: product of (1 + a_n) diverges");
  const auto csum = o.cbar.sum();
  if (!csum) throw std::invalid_argument("rsq: sum of cbar_n diverges");

  Certificate cert;
  cert.expected_x0 = o.x0;
  cert.K = resolve_K(o.K, o.x0);
  const double L = *prod * kCertificateSlack;
  cert.rho = BoundednessModulus::constant(L, "rho = prod (1 + a_i)");
  cert.L = L;
  // C_n < cbar_n surely, so the sum stays strictly below sum cbar_n.
  cert.sigma = BoundednessModulus::constant(*csum, "sigma = sum cbar_i");
  cert.M = *csum;

  HypothesisFlags flags;
  flags.is_rs = true;
  flags.is_supermartingale = *prod == 1.0 && *csum == 0.0;

  nlohmann::json params = {{"a", o.a.to_json()}, {"cbar", o.cbar.to_json()}, {"eta", o.eta},
                           {"x0", o.x0},         {"K", cert.K}};
  Sampler sampler = [a = o.a, cbar = o.cbar, eta = o.eta, x0 = o.x0](std::uint64_t seed,
                                                                     std::size_t horizon) {
    PathTrace t;
    t.seed = seed;
    t.horizon = horizon;
    t.x.resize(horizon + 1);
    t.a.resize(horizon + 1);
    t.b.assign(horizon + 1, 0.0);
    t.c.resize(horizon + 1);
    CounterRng rng(seed);
    double X = x0;
    for (std::size_t n = 0;; ++n) {
      const double cb = cbar(n);
      const double C = cb > 0.0 ? cb * rng.uniform() : 0.0;
      t.x[n] = X;
      t.a[n] = a(n);
      t.c[n] = C;
      if (n == horizon) break;
      double factor = 1.0;
      if (eta > 0.0) factor = rng.uniform() < 0.5 ? 1.0 - eta : 1.0 + eta;
      X = ((1.0 + a(n)) * X + C) * factor;
    }
    return t;
  };
  return ProcessFamily("general_rs", std::move(params), std::move(cert), flags, std::move(sampler));
}

ProcessFamily deterministic_rs(const DeterministicRsOptions& o) {
  require_finite_nonneg(o.x0, "x0");
  Certificate cert;
  cert.expected_x0 = o.x0;
  cert.K = o.K ? *o.K : std::max(1.0, 2.0 * o.x0);
  if (!(cert.K > o.x0)) throw std::invalid_argument("rsq: K must exceed x0");
  cert.L = o.L ? o.L : o.alpha.product_one_plus();
  cert.M = o.M ? o.M : o.gamma.sum();
  HypothesisFlags flags;
  flags.is_deterministic = true;
  if (cert.L && cert.M) {
    cert.rho = BoundednessModulus::constant(*cert.L, "L = prod (1 + alpha_i)");
    cert.sigma = BoundednessModulus::constant(*cert.M, "M = sum gamma_i");
    flags.is_rs = true;
  } else {
    cert.notes.push_back("L or M rejected: alpha or gamma is not summable");
  }

  nlohmann::json params = {{"alpha", o.alpha.to_json()},
                           {"beta", o.beta ? o.beta->to_json() : nlohmann::json("tight")},
                           {"gamma", o.gamma.to_json()},
                           {"x0", o.x0},
                           {"K", cert.K}};
  if (cert.L) params["L"] = *cert.L;
  if (cert.M) params["M"] = *cert.M;

  Sampler sampler = [alpha = o.alpha, beta = o.beta, gamma = o.gamma, x0 = o.x0](
                        std::uint64_t seed, std::size_t horizon) {
    PathTrace t;
    t.seed = seed;
    t.horizon = horizon;
    t.x.resize(horizon + 1);
    t.a.resize(horizon + 1);
    t.b.resize(horizon + 1);
    t.c.resize(horizon + 1);
    double x = x0;
    for (std::size_t n = 0;; ++n) {
      const double al = alpha(n);
      const double ga = gamma(n);
      const double grown = (1.0 + al) * x + ga;
      double be = beta ? (*beta)(n) : al * x + ga;
      if (be > grown) {
        be = grown;
        ++t.clamp_events;
      }
      t.x[n] = x;
      t.a[n] = al;
      t.b[n] = be;
      t.c[n] = ga;
      if (n == horizon) break;
      x = beta ? grown - be : x;  // tight beta keeps x fixed exactly
    }
    return t;
  };
  return ProcessFamily("deterministic_rs", std::move(params), std::move(cert), flags,
                       std::move(sampler));
}

ProcessFamily family_from_json(const nlohmann::json& d) {
  if (!d.is_object() || !d.contains("kind")) {
    throw std::invalid_argument("rsq: family descriptor needs a \"kind\"");
  }
  const auto kind = d.at("kind").get<std::string>();
  const auto optK = [&]() -> std::optional<double> {
    if (d.contains("K")) return d.at("K").get<double>();
    return std::nullopt;
  };
  if (kind == "multiplicative_supermartingale") {
    FactorDistribution f = FactorDistribution::two_point(0.5, 1.5);
    if (d.contains("factors")) {
      f.values = d.at("factors").at("values").get<std::vector<double>>();
      f.probs = d.at("factors").at("probs").get<std::vector<double>>();
    }
    return multiplicative_supermartingale(d.value("u0", 1.0), f, optK());
  }
  if (kind == "sgd_quadratic") {
    SgdQuadraticOptions o;
    o.x0 = d.value("x0", 1.0);
    if (d.contains("steps")) o.steps = Schedule::from_json(d.at("steps"));
    o.noise_sd = d.value("noise_sd", 1.0);
    const auto noise = d.value("noise", std::string("two_point"));
    if (noise == "gaussian") {
      o.noise = NoiseKind::gaussian;
    } else if (noise != "two_point") {
      throw std::invalid_argument("rsq: unknown noise kind '" + noise + "'");
    }
    if (d.contains("noise_horizon")) o.noise_horizon = d.at("noise_horizon").get<std::uint64_t>();
    o.K = optK();
    return sgd_quadratic(o);
  }
  if (kind == "general_rs") {
    GeneralRsOptions o;
    if (d.contains("a")) o.a = Schedule::from_json(d.at("a"));
    if (d.contains("cbar")) o.cbar = Schedule::from_json(d.at("cbar"));
    o.eta = d.value("eta", 0.0);
    o.x0 = d.value("x0", 1.0);
    o.K = optK();
    return general_rs(o);
  }
  if (kind == "deterministic_rs") {
    DeterministicRsOptions o;
    if (d.contains("alpha")) o.alpha = Schedule::from_json(d.at("alpha"));
    if (d.contains("beta") && !d.at("beta").is_string()) o.beta = Schedule::from_json(d.at("beta"));
    if (d.contains("gamma")) o.gamma = Schedule::from_json(d.at("gamma"));
    o.x0 = d.value("x0", 0.5);
    o.K = optK();
    if (d.contains("L")) o.L = d.at("L").get<double>();
    if (d.contains("M")) o.M = d.at("M").get<double>();
    return deterministic_rs(o);
  }
  throw std::invalid_argument("rsq: unknown family kind '" + kind + "'");
}

std::vector<std::pair<std::string, std::string>> family_catalog() {
  return {
      {"multiplicative_supermartingale", "U_{n+1} = U_n xi_n, xi iid with mean <= 1"},
      {"sgd_quadratic", "x_{n+1} = x_n - u_n (x_n + zeta_n), X_n = x_n^2"},
      {"general_rs", "X_{n+1} = ((1+a_n) X_n + C_n)(1 +- eta), C_n uniform on [0, cbar_n]"},
      {"deterministic_rs", "x_{n+1} = (1+alpha_n) x_n - beta_n + gamma_n"},
  };
}

}  // namespace rsq
