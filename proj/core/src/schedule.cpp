#include "rsq/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rsq {

namespace {

void require_nonnegative(double v, const char* what) {
  if (std::isnan(v) || v < 0.0 || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("rsq: schedule ") + what +
                                " must be finite and nonnegative");
  }
}

}  // namespace

Schedule::Schedule(Kind kind, double c, double p, std::vector<double> values)
    : kind_(kind), c_(c), p_(p), values_(std::move(values)) {}

Schedule Schedule::constant(double u) {
  require_nonnegative(u, "value");
  return Schedule(Kind::constant, u, 0.0, {});
}

Schedule Schedule::harmonic(double c) {
  require_nonnegative(c, "coefficient");
  return Schedule(Kind::harmonic, c, 1.0, {});
}

Schedule Schedule::power(double c, double p) {
  require_nonnegative(c, "coefficient");
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("rsq: power schedule exponent must be positive");
  }
  return Schedule(Kind::power, c, p, {});
}

Schedule Schedule::geometric(double c, double q) {
  require_nonnegative(c, "coefficient");
  require_nonnegative(q, "ratio");
  return Schedule(Kind::geometric, c, q, {});
}

Schedule Schedule::explicit_list(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("rsq: explicit schedule needs values");
  for (double v : values) require_nonnegative(v, "entry");
  return Schedule(Kind::explicit_list, 0.0, 0.0, std::move(values));
}

double Schedule::operator()(std::uint64_t n) const noexcept {
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::harmonic:
      return c_ / (static_cast<double>(n) + 1.0);
    case Kind::power:
      return c_ * std::pow(static_cast<double>(n) + 1.0, -p_);
    case Kind::geometric:
      return c_ * std::pow(p_, static_cast<double>(n));
    case Kind::explicit_list:
      return values_[std::min<std::uint64_t>(n, values_.size() - 1)];
  }
  return 0.0;
}

std::optional<double> Schedule::sum() const {
  switch (kind_) {
    case Kind::constant:
    case Kind::harmonic:
      if (c_ == 0.0) return 0.0;
      return std::nullopt;
    case Kind::power:
      if (c_ == 0.0) return 0.0;
      if (p_ > 1.0) return c_ * std::riemann_zeta(p_);
      return std::nullopt;
    case Kind::geometric:
      if (c_ == 0.0) return 0.0;
      if (p_ < 1.0) return c_ / (1.0 - p_);
      return std::nullopt;
    case Kind::explicit_list: {
      if (values_.back() != 0.0) return std::nullopt;
      double s = 0.0;
      for (double v : values_) s += v;
      return s;
    }
  }
  return std::nullopt;
}

std::optional<double> Schedule::sum_of_squares() const {
  switch (kind_) {
    case Kind::constant:
      if (c_ == 0.0) return 0.0;
      return std::nullopt;
    case Kind::harmonic:
      return c_ * c_ * std::numbers::pi * std::numbers::pi / 6.0;
    case Kind::power:
      if (c_ == 0.0) return 0.0;
      if (2.0 * p_ > 1.0) return c_ * c_ * std::riemann_zeta(2.0 * p_);
      return std::nullopt;
    case Kind::geometric:
      if (c_ == 0.0) return 0.0;
      if (p_ < 1.0) return c_ * c_ / (1.0 - p_ * p_);
      return std::nullopt;
    case Kind::explicit_list: {
      if (values_.back() != 0.0) return std::nullopt;
      double s = 0.0;
      for (double v : values_) s += v * v;
      return s;
    }
  }
  return std::nullopt;
}

double Schedule::partial_sum_of_squares(std::uint64_t n) const {
  if (kind_ == Kind::constant) return static_cast<double>(n) * c_ * c_;
  if (kind_ == Kind::geometric && p_ < 1.0) {
    const double q2 = p_ * p_;
    return c_ * c_ * (1.0 - std::pow(q2, static_cast<double>(n))) / (1.0 - q2);
  }
  double s = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double u = (*this)(i);
    s += u * u;
  }
  return s;
}

std::optional<double> Schedule::product_one_plus() const {
  const auto total = sum();
  if (!total) return std::nullopt;
  switch (kind_) {
    case Kind::geometric: {
      double prod = 1.0;
      for (std::uint64_t i = 0;; ++i) {
        const double u = (*this)(i);
        if (u < 1e-18) break;
        prod *= 1.0 + u;
      }
      return prod;
    }
    case Kind::explicit_list: {
      double prod = 1.0;
      for (double v : values_) prod *= 1.0 + v;
      return prod;
    }
    default:
      // prod (1+u_i) <= exp(sum u_i)
      return std::exp(*total);
  }
}

double Schedule::max_before(std::uint64_t n) const {
  if (n == 0) return 0.0;
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::harmonic:
    case Kind::power:
      return (*this)(0);
    case Kind::geometric:
      return p_ <= 1.0 ? (*this)(0) : (*this)(n - 1);
    case Kind::explicit_list: {
      const auto end = std::min<std::uint64_t>(n, values_.size());
      return *std::max_element(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return 0.0;
}

std::optional<RateOfDivergence> Schedule::rate_of_divergence(double max_scan_terms) const {
  if (sum()) return std::nullopt;
  switch (kind_) {
    case Kind::constant:
      return RateOfDivergence::constant_step(c_);
    case Kind::harmonic:
      return RateOfDivergence::power_schedule(c_, 1.0);
    case Kind::power:
      return RateOfDivergence::power_schedule(c_, p_);
    default:
      return RateOfDivergence::scan(node(), max_scan_terms);
  }
}

NodePtr Schedule::node() const {
  const std::string tag = "u_n: " + describe();
  switch (kind_) {
    case Kind::constant:
      return make_node("constant", 1, {{"value", c_}}, {}, tag);
    case Kind::harmonic:
    case Kind::power:
      return make_node("schedule_power", 1, {{"c", c_}, {"p", p_}}, {}, tag);
    case Kind::geometric:
      return make_node("schedule_geometric", 1, {{"c", c_}, {"q", p_}}, {}, tag);
    case Kind::explicit_list:
      return make_node("schedule_explicit", 1, {}, {}, tag, values_);
  }
  return nullptr;
}

nlohmann::json Schedule::to_json() const {
  switch (kind_) {
    case Kind::constant:
      return {{"kind", "constant"}, {"u", c_}};
    case Kind::harmonic:
      return {{"kind", "harmonic"}, {"c", c_}};
    case Kind::power:
      return {{"kind", "power"}, {"c", c_}, {"p", p_}};
    case Kind::geometric:
      return {{"kind", "geometric"}, {"c", c_}, {"q", p_}};
    case Kind::explicit_list:
      return {{"kind", "explicit"}, {"values", values_}};
  }
  return {};
}

Schedule Schedule::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return constant(j.at("u").get<double>());
  if (kind == "harmonic") return harmonic(j.value("c", 1.0));
  if (kind == "power") return power(j.at("c").get<double>(), j.at("p").get<double>());
  if (kind == "geometric") return geometric(j.at("c").get<double>(), j.at("q").get<double>());
  if (kind == "explicit") return explicit_list(j.at("values").get<std::vector<double>>());
  throw std::invalid_argument("rsq: unknown schedule kind '" + kind + "'");
}

std::string Schedule::describe() const {
  std::ostringstream os;
  os.precision(12);
  switch (kind_) {
    case Kind::constant:
      os << "constant " << c_;
      break;
    case Kind::harmonic:
      os << c_ << "/(n+1)";
      break;
    case Kind::power:
      os << c_ << "(n+1)^-" << p_;
      break;
    case Kind::geometric:
      os << c_ << "*" << p_ << "^n";
      break;
    case Kind::explicit_list:
      os << "explicit[" << values_.size() << "]";
      break;
  }
  return os.str();
}

}  // namespace rsq
