#include "rsq/node.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "rsq/iterate.hpp"

namespace rsq {

Node::Node(std::string rule, std::size_t arity, std::vector<Param> params,
           std::vector<NodePtr> children, std::string tag, std::vector<double> data,
           CustomFn custom)
    : rule_(std::move(rule)),
      arity_(arity),
      params_(std::move(params)),
      children_(std::move(children)),
      tag_(std::move(tag)),
      data_(std::move(data)),
      custom_(std::move(custom)) {
  for (const auto& c : children_) {
    if (!c) throw std::invalid_argument("rsq::Node: null child in rule '" + rule_ + "'");
  }
}

double Node::param(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw std::out_of_range("rsq::Node: rule '" + rule_ + "' has no parameter '" +
                          std::string(name) + "'");
}

bool Node::has_param(std::string_view name) const noexcept {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Param& p) { return p.name == name; });
}

const Node& Node::child(std::size_t i) const {
  if (i >= children_.size()) {
    throw std::out_of_range("rsq::Node: rule '" + rule_ + "' has no child " +
                            std::to_string(i));
  }
  return *children_[i];
}

NodePtr make_node(std::string rule, std::size_t arity, std::vector<Param> params,
                  std::vector<NodePtr> children, std::string tag, std::vector<double> data,
                  CustomFn custom) {
  return std::make_shared<const Node>(std::move(rule), arity, std::move(params),
                                      std::move(children), std::move(tag), std::move(data),
                                      std::move(custom));
}

namespace {

using Args = std::span<const double>;
using RuleFn = double (*)(const Node&, Args, EvalLog*);

double ev(const Node& n, std::initializer_list<double> args, EvalLog* log) {
  return evaluate(n, Args(args.begin(), args.size()), log);
}

double sq(double x) { return x * x; }

constexpr double kInf = std::numeric_limits<double>::infinity();

// Leaves ---------------------------------------------------------------------

double rule_constant(const Node& n, Args, EvalLog*) { return n.param("value"); }

double rule_power(const Node& n, Args a, EvalLog*) {
  static constexpr const char* kExp[] = {"p0", "p1", "p2"};
  double v = n.param("coef");
  for (std::size_t i = 0; i < a.size() && i < 3; ++i) {
    if (!n.has_param(kExp[i])) continue;
    const double p = n.param(kExp[i]);
    if (p == 0.0) continue;
    if (p == 1.0) {
      v *= a[i];
    } else if (p == -1.0) {
      v /= a[i];
    } else if (p == 2.0) {
      v *= a[i] * a[i];
    } else {
      v *= std::pow(a[i], p);
    }
  }
  return v;
}

double rule_affine(const Node& n, Args a, EvalLog*) {
  return n.param("slope") * a[0] + n.param("offset");
}

double rule_custom(const Node& n, Args a, EvalLog*) {
  if (!n.custom()) {
    throw std::logic_error("rsq: custom leaf '" + n.tag() + "' has no evaluator attached");
  }
  return n.custom()(a);
}

// Step-size schedules, argument n.
double rule_schedule_power(const Node& n, Args a, EvalLog*) {
  const double p = n.param("p");
  const double base = a[0] + 1.0;
  return n.param("c") * (p == 1.0 ? 1.0 / base : std::pow(base, -p));
}

double rule_schedule_geometric(const Node& n, Args a, EvalLog*) {
  return n.param("c") * std::pow(n.param("q"), a[0]);
}

double rule_schedule_explicit(const Node& n, Args a, EvalLog*) {
  const auto& d = n.data();
  if (d.empty()) return 0.0;
  const double idx = std::min(a[0], static_cast<double>(d.size() - 1));
  return d[static_cast<std::size_t>(idx)];
}

// Rates of divergence, arguments (n, x); results are indices.
double rule_divergence_constant(const Node& n, Args a, EvalLog*) {
  return std::ceil(a[1] / n.param("u"));
}

// For decreasing u_i = c (i+1)^-p the sum over [n; n+r] dominates the integral
// of c t^-p over [n+1, n+r+2], which inverts in closed form.
double rule_divergence_power(const Node& n, Args a, EvalLog*) {
  const double c = n.param("c");
  const double p = n.param("p");
  const double start = a[0] + 1.0;
  const double x = a[1];
  double end;  // smallest t with integral_{start}^{t} c s^-p ds >= x
  if (p == 1.0) {
    end = start * std::exp(x / c);
  } else {
    const double q = 1.0 - p;
    end = std::pow(x * q / c + std::pow(start, q), 1.0 / q);
  }
  if (!std::isfinite(end)) return kInf;
  return std::max(0.0, std::ceil(end) - a[0] - 2.0);
}

double rule_divergence_scan(const Node& n, Args a, EvalLog*) {
  const auto& u = n.child(0);
  const double cap = n.param("cap");
  const double start = a[0];
  const double x = a[1];
  double sum = 0.0;
  for (double r = 0.0; r <= cap; r += 1.0) {
    sum += ev(u, {start + r}, nullptr);
    if (sum >= x) return r;
  }
  throw std::runtime_error("rsq: rate of divergence scan exceeded " +
                           std::to_string(static_cast<long long>(cap)) + " terms (x=" +
                           std::to_string(x) + ")");
}

// Section 2 calculus -----------------------------------------------------------

double rule_monotone_learnable(const Node& n, Args a, EvalLog*) { return n.param("K") / a[0]; }

double rule_learnable_from_boundedness(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0], eps = a[1];
  return 2.0 * ev(n.child(0), {lam / 2.0}, log) / (lam * eps);
}

double rule_boundedness_from_direct_rate(const Node& n, Args a, EvalLog* log) {
  const double eps = n.param("eps");
  return n.param("a") * ev(n.child(0), {a[0], eps}, log) + eps;
}

double rule_learnable_sum(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0] / 2.0, eps = a[1] / 2.0;
  return ev(n.child(0), {lam, eps}, log) + ev(n.child(1), {lam, eps}, log);
}

// children: phi (X), psi (Y), rho (bounds X), sigma (bounds Y)
double rule_learnable_product(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0] / 4.0, eps = a[1];
  const double rho = ev(n.child(2), {lam}, log);
  const double sigma = ev(n.child(3), {lam}, log);
  return ev(n.child(0), {lam, eps / (2.0 * sigma)}, log) +
         ev(n.child(1), {lam, eps / (2.0 * rho)}, log);
}

double rule_boundedness_sum(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0] / 2.0;
  return ev(n.child(0), {lam}, log) + ev(n.child(1), {lam}, log);
}

double rule_boundedness_product(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0] / 2.0;
  return ev(n.child(0), {lam}, log) * ev(n.child(1), {lam}, log);
}

// Section 3 ---------------------------------------------------------------------

double rule_supermartingale_learnable(const Node& n, Args a, EvalLog*) {
  return n.param("c") * sq(n.param("K") / (a[0] * a[1]));
}

// phi_1: the supermartingale rate for U_{n ^ T_x} + x with x = sigma(lam/2),
// evaluated at confidence lam/2.
double rule_stopped_supermartingale_learnable(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0], eps = a[1];
  const double x = ev(n.child(0), {lam / 2.0}, log);
  return n.param("c") * sq((n.param("K") + x) / ((lam / 2.0) * eps));
}

// chi_1: Ville bound (K+x)/(lam/2) for the stopped, shifted supermartingale.
double rule_stopped_ville_boundedness(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0];
  const double x = ev(n.child(0), {lam / 2.0}, log);
  return 2.0 * (n.param("K") + x) / lam;
}

double rule_rs_learnable_closed(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0], eps = a[1];
  const double rho = ev(n.child(0), {lam / 8.0}, log);
  const double sigma = ev(n.child(1), {lam / 16.0}, log);
  return n.param("cbar") * sq(rho * (n.param("K") + sigma) / (lam * eps));
}

double rule_rs_chi3(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0];
  return 5.0 * (n.param("K") + ev(n.child(0), {lam / 4.0}, log)) / lam;
}

double rule_rs_x_boundedness(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0];
  const double rho = ev(n.child(0), {lam / 2.0}, log);
  const double sigma = ev(n.child(1), {lam / 8.0}, log);
  return 9.0 * (n.param("K") + sigma) * rho / lam;
}

double rule_nonstochastic_rate(const Node& n, Args a, EvalLog*) {
  return 8.0 * n.param("L") * (n.param("K") + n.param("M")) / a[0];
}

// Section 4 ---------------------------------------------------------------------

double rule_liminf_from_divergence(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0], eps = a[1], idx = a[2];
  const double chi = ev(n.child(0), {lam}, log);
  return ev(n.child(1), {idx, chi / eps}, log);
}

double rule_liminf_transfer(const Node& n, Args a, EvalLog* log) {
  const double lam = a[0], eps = a[1], idx = a[2];
  const double tau = ev(n.child(2), {lam / 2.0}, log);
  double delta = ev(n.child(1), {eps, tau}, log);
  if (!(delta > 0.0)) {
    throw std::domain_error("rsq: drift modulus evaluated to a nonpositive value");
  }
  if (delta >= 1.0) {
    const double clamped = std::nextafter(1.0, 0.0);
    if (log) {
      std::ostringstream os;
      os.precision(17);
      os << "liminf_transfer: delta(" << eps << ", " << tau << ") = " << delta
         << " >= 1 clamped to 1-";
      log->warnings.push_back(os.str());
    }
    delta = clamped;
  }
  return ev(n.child(0), {lam / 2.0, delta, idx}, log);
}

double rule_drift_from_mu(const Node& n, Args a, EvalLog* log) {
  const double eps = a[0], K = a[1];
  const double v = ev(n.child(0), {std::sqrt(std::min(eps, 1.0 / K))}, log);
  if (!(v > 0.0)) throw std::domain_error("rsq: mu must be positive on (0,1]");
  return v;
}

// f(j) = max{g(j), Psi(lam/2, eps/2, j)}
double rule_rm_counterfunction(const Node& n, Args a, EvalLog* log) {
  const double j = a[0];
  const double g = ev(n.child(0), {j}, log);
  const double psi = ev(n.child(1), {n.param("lambda") / 2.0, n.param("eps") / 2.0, j}, log);
  return std::max(g, psi);
}

double index_as_double(const IterateResult& r) {
  return r.saturated ? kInf : static_cast<double>(r.value);
}

double rule_metastable_iterate(const Node& n, Args, EvalLog* log) {
  return index_as_double(iterate_shifted(n.child(0), n.param("p"),
                                         static_cast<std::uint64_t>(n.param("cap")), log));
}

// Gamma(lam, eps, g): iterate f~ ceil(phi(lam/2, eps/2)) times from 0.
// children: phi, f (an rm_counterfunction node)
double rule_rm_metastable(const Node& n, Args, EvalLog* log) {
  const double lam = n.param("lambda"), eps = n.param("eps");
  const double p = ev(n.child(0), {lam / 2.0, eps / 2.0}, log);
  return index_as_double(
      iterate_shifted(n.child(1), p, static_cast<std::uint64_t>(n.param("cap")), log));
}

const std::unordered_map<std::string_view, RuleFn>& rule_table() {
  static const std::unordered_map<std::string_view, RuleFn> table = {
      {"constant", rule_constant},
      {"power", rule_power},
      {"affine", rule_affine},
      {"custom", rule_custom},
      {"schedule_power", rule_schedule_power},
      {"schedule_geometric", rule_schedule_geometric},
      {"schedule_explicit", rule_schedule_explicit},
      {"divergence_constant", rule_divergence_constant},
      {"divergence_power", rule_divergence_power},
      {"divergence_scan", rule_divergence_scan},
      {"monotone_learnable", rule_monotone_learnable},
      {"learnable_from_boundedness", rule_learnable_from_boundedness},
      {"boundedness_from_direct_rate", rule_boundedness_from_direct_rate},
      {"learnable_sum", rule_learnable_sum},
      {"learnable_product", rule_learnable_product},
      {"boundedness_sum", rule_boundedness_sum},
      {"boundedness_product", rule_boundedness_product},
      {"supermartingale_learnable", rule_supermartingale_learnable},
      {"stopped_supermartingale_learnable", rule_stopped_supermartingale_learnable},
      {"stopped_ville_boundedness", rule_stopped_ville_boundedness},
      {"rs_learnable_closed", rule_rs_learnable_closed},
      {"rs_chi3", rule_rs_chi3},
      {"rs_x_boundedness", rule_rs_x_boundedness},
      {"nonstochastic_rate", rule_nonstochastic_rate},
      {"liminf_from_divergence", rule_liminf_from_divergence},
      {"liminf_transfer", rule_liminf_transfer},
      {"drift_from_mu", rule_drift_from_mu},
      {"rm_counterfunction", rule_rm_counterfunction},
      {"metastable_iterate", rule_metastable_iterate},
      {"rm_metastable", rule_rm_metastable},
  };
  return table;
}

}  // namespace

bool is_known_rule(std::string_view rule) noexcept {
  return rule_table().count(rule) != 0;
}

double evaluate(const Node& node, std::span<const double> args, EvalLog* log) {
  if (args.size() != node.arity()) {
    throw std::invalid_argument("rsq: rule '" + node.rule() + "' expects " +
                                std::to_string(node.arity()) + " argument(s), got " +
                                std::to_string(args.size()));
  }
  const auto& table = rule_table();
  const auto it = table.find(node.rule());
  if (it == table.end()) throw std::logic_error("rsq: unknown rule '" + node.rule() + "'");
  return it->second(node, args, log);
}

nlohmann::json to_json(const Node& node) {
  nlohmann::json j;
  j["rule"] = node.rule();
  j["arity"] = node.arity();
  if (!node.tag().empty()) j["tag"] = node.tag();
  if (!node.params().empty()) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : node.params()) params.push_back({p.name, p.value});
    j["params"] = std::move(params);
  }
  if (!node.data().empty()) j["data"] = node.data();
  if (!node.children().empty()) {
    nlohmann::json kids = nlohmann::json::array();
    for (const auto& c : node.children()) kids.push_back(to_json(*c));
    j["children"] = std::move(kids);
  }
  return j;
}

NodePtr node_from_json(const nlohmann::json& j, const CustomResolver& resolver) {
  const std::string rule = j.at("rule").get<std::string>();
  if (!is_known_rule(rule)) throw std::invalid_argument("rsq: unknown rule '" + rule + "'");
  std::vector<Param> params;
  if (j.contains("params")) {
    for (const auto& p : j.at("params")) {
      params.push_back({p.at(0).get<std::string>(), p.at(1).get<double>()});
    }
  }
  std::vector<NodePtr> children;
  if (j.contains("children")) {
    for (const auto& c : j.at("children")) children.push_back(node_from_json(c, resolver));
  }
  std::vector<double> data;
  if (j.contains("data")) data = j.at("data").get<std::vector<double>>();
  std::string tag = j.value("tag", std::string{});
  CustomFn custom;
  if (rule == "custom" && resolver) custom = resolver(tag);
  return make_node(rule, j.at("arity").get<std::size_t>(), std::move(params),
                   std::move(children), std::move(tag), std::move(data), std::move(custom));
}

namespace {

void render(const Node& n, int depth, std::ostringstream& os) {
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << n.rule();
  if (!n.tag().empty()) os << "  [" << n.tag() << "]";
  if (!n.params().empty()) {
    os << "  (";
    for (std::size_t i = 0; i < n.params().size(); ++i) {
      if (i) os << ", ";
      os << n.params()[i].name << "=" << n.params()[i].value;
    }
    os << ")";
  }
  if (!n.data().empty()) os << "  <" << n.data().size() << " values>";
  os << "\n";
  for (const auto& c : n.children()) render(*c, depth + 1, os);
}

}  // namespace

std::string render_tree(const Node& node) {
  std::ostringstream os;
  os.precision(12);
  render(node, 0, os);
  return os.str();
}

}  // namespace rsq
