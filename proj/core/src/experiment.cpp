#include "rsq/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace rsq {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigError::ConfigError(const std::string& path, std::size_t line, const std::string& message)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

constexpr double kDefaultLevel = 0.25;

std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the `occurrence`-th (0-based) appearance of "key" at or after `from`.
std::size_t line_of_key(const std::string& text, const std::string& key, std::size_t occurrence = 0,
                        std::size_t from = 0) {
  const std::string needle = "\"" + key + "\"";
  std::size_t pos = text.find(needle, from);
  for (std::size_t i = 0; i < occurrence && pos != std::string::npos; ++i) pos = text.find(needle, pos + 1);
  return pos == std::string::npos ? 1 : line_at(text, pos);
}

double level(const json& o, const char* key) {
  const double v = o.value(key, kDefaultLevel);
  if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument(std::string(key) + " must lie in (0, 1)");
  return v;
}

std::optional<double> override_value(const json& o) {
  if (!o.contains("override")) return std::nullopt;
  const auto& ov = o.at("override");
  if (ov.is_number()) return ov.get<double>();
  if (ov.is_object() && ov.contains("constant")) return ov.at("constant").get<double>();
  throw std::invalid_argument("override must be a number or {\"constant\": value}");
}

const std::string kOverrideTag = "override: planted constant";

BoundednessModulus lifted(const std::optional<BoundednessModulus>& m, const char* name,
                          const ProcessFamily& family) {
  if (!m) {
    std::string why = std::string("family ") + family.kind() + " has no " + name + " certificate";
    for (const auto& n : family.certificate().notes) why += "; " + n;
    throw std::invalid_argument(why);
  }
  const Node& node = m->provenance();
  if (node.rule() == "constant" && node.param("value") < 1.0) {
    return BoundednessModulus::constant(1.0, std::string(name) + " = 1 (certificate below 1 lifted)");
  }
  return *m;
}

Counterfunction counterfunction_from(const json& o) {
  if (!o.contains("g")) return Counterfunction::identity();
  const auto& g = o.at("g");
  const auto kind = g.is_string() ? g.get<std::string>() : g.at("kind").get<std::string>();
  if (kind == "identity") return Counterfunction::identity();
  if (kind == "zero") return Counterfunction::zero();
  if (kind == "constant") return Counterfunction::constant(g.at("c").get<std::uint64_t>());
  if (kind == "affine") {
    return Counterfunction::affine(g.at("slope").get<std::uint64_t>(), g.value("offset", std::uint64_t{0}));
  }
  throw std::invalid_argument("unknown counterfunction kind '" + kind + "'");
}

IntervalScheme scheme_from(const json& o, const ProcessFamily& family, double lambda, double eps,
                           const VerifyOptions& opt) {
  json s = o.value("scheme", json("dyadic"));
  const auto kind = s.is_string() ? s.get<std::string>() : s.at("kind").get<std::string>();
  if (kind == "dyadic") return IntervalScheme::dyadic(opt.horizon);
  if (kind == "sliding") {
    const auto width = s.is_object() ? s.value("width", std::size_t{64}) : std::size_t{64};
    return IntervalScheme::sliding(width, opt.horizon);
  }
  if (kind == "greedy") {
    McOptions pilot{s.is_object() ? s.value("pilot_paths", std::size_t{200}) : std::size_t{200}, opt.horizon,
                    sub_seed(opt.seed, 0x70696c6f74ULL), opt.threads};
    const double frac = s.is_object() ? s.value("threshold", 0.5) : 0.5;
    return IntervalScheme::greedy_pilot(family, eps, frac * lambda, pilot);
  }
  throw std::invalid_argument("unknown interval scheme '" + kind + "'");
}

void check_scheme_option(const json& o) {
  if (!o.contains("scheme")) return;
  const auto& s = o.at("scheme");
  const auto kind = s.is_string() ? s.get<std::string>() : s.at("kind").get<std::string>();
  if (kind != "dyadic" && kind != "sliding" && kind != "greedy") {
    throw std::invalid_argument("unknown interval scheme '" + kind + "'");
  }
}

std::string show(double v) { return format_number(v); }

struct RsInputs {
  double K;
  BoundednessModulus rho;
  BoundednessModulus sigma;
};

RsInputs rs_inputs(const ProcessFamily& family) {
  if (!family.flags().is_rs) {
    std::string why = "family " + family.kind() + " is not certified as an almost-supermartingale";
    for (const auto& n : family.certificate().notes) why += "; " + n;
    throw std::invalid_argument(why);
  }
  const auto& c = family.certificate();
  if (!(c.K > 1.0)) throw std::invalid_argument("certificate K must exceed 1 for the Robbins-Siegmund bounds");
  return {c.K, lifted(c.rho, "rho", family), lifted(c.sigma, "sigma", family)};
}

LiminfModulus rm_Phi(const ProcessFamily& family, const RsInputs& in) {
  if (!family.flags().is_rm || !family.certificate().r) {
    throw std::invalid_argument("family " + family.kind() + " has no divergent step schedule certificate");
  }
  return liminf_modulus(rs_bsum_boundedness(in.K, in.rho, in.sigma), *family.certificate().r);
}

LiminfModulus rm_Psi(const ProcessFamily& family, const RsInputs& in) {
  const auto& c = family.certificate();
  if (!c.delta) throw std::invalid_argument("family " + family.kind() + " has no drift certificate delta");
  return liminf_transfer(rm_Phi(family, in), *c.delta, rs_x_boundedness(in.K, in.rho, in.sigma));
}

LiminfModulus constant_liminf(double v) {
  return LiminfModulus(make_node("constant", 3, {{"value", v}}, {}, kOverrideTag));
}

template <class F>
PlannedClaim make_claim(std::string id, std::string description, NodePtr tree, std::string bound_text, F run) {
  return {std::move(id), std::move(description), std::move(tree), std::move(bound_text), std::move(run)};
}

const std::vector<std::pair<std::string, std::string>>& catalog() {
  static const std::vector<std::pair<std::string, std::string>> c = {
      {"sm.rho", "Ville modulus K/lambda for a nonnegative supermartingale"},
      {"sm.phi", "learnable rate c (K/(lambda eps))^2 for a nonnegative supermartingale"},
      {"sm.crossing", "crossing inequality E[C[a,b]] <= 2pE[U_0]/M + 1 on a partition of [0, M]"},
      {"rs.phi", "learnable rate for X_n built through the composition lemmas"},
      {"rs.phi_closed", "simplified learnable rate cbar (rho(lambda/8)(K + sigma(lambda/16))/(lambda eps))^2"},
      {"rs.chi", "modulus of uniform boundedness for sum B_i"},
      {"rs.tau", "modulus of uniform boundedness for X_n"},
      {"rm.Phi", "liminf-modulus for V_n from the rate of divergence"},
      {"rm.psi", "liminf-modulus for X_n transferred through delta"},
      {"rm.gamma", "metastable rate Gamma for X_n -> 0"},
      {"rm.solution", "search bound for an eps-solution with constant steps"},
      {"ns.phi", "learnable rate 8L(K+M)/eps for the nonstochastic recurrence"},
  };
  return c;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> claim_catalog() { return catalog(); }

PlannedClaim plan_claim(const ProcessFamily& family, const std::string& id, const json& o) {
  const auto desc_it = std::find_if(catalog().begin(), catalog().end(), [&](const auto& p) { return p.first == id; });
  if (desc_it == catalog().end()) throw std::invalid_argument("unknown claim '" + id + "'");
  const std::string desc = desc_it->second;
  const auto ov = override_value(o);
  const auto& cert = family.certificate();

  if (id == "sm.rho" || id == "sm.phi" || id == "sm.crossing") {
    if (!family.flags().is_supermartingale) {
      throw std::invalid_argument("claim " + id + " needs a certified nonnegative supermartingale");
    }
  }

  if (id == "sm.rho" || id == "rs.tau") {
    const double lam = level(o, "lambda");
    const auto rho = ov ? BoundednessModulus::constant(*ov, kOverrideTag)
                        : id == "sm.rho" ? BoundednessModulus::power(cert.K, -1.0, "Ville modulus K/lambda")
                                         : [&] {
                                             const auto in = rs_inputs(family);
                                             return rs_x_boundedness(in.K, in.rho, in.sigma);
                                           }();
    return make_claim(id, desc, rho.node(), show(rho.at(lam)), [=, &family](const VerifyOptions& opt) {
      return verify_boundedness(family, rho, Confidence(lam), opt);
    });
  }

  if (id == "sm.phi" || id == "rs.phi" || id == "rs.phi_closed") {
    const double lam = level(o, "lambda");
    const double eps = level(o, "eps");
    check_scheme_option(o);
    const auto phi = [&] {
      if (ov) return LearnableRate::constant(*ov, kOverrideTag);
      if (id == "sm.phi") return supermartingale_learnable(cert.K);
      const auto in = rs_inputs(family);
      return id == "rs.phi" ? rs_learnable_pipeline(in.K, in.rho, in.sigma)
                            : rs_learnable_closed(in.K, in.rho, in.sigma);
    }();
    const json opts = o;
    return make_claim(id, desc, phi.node(), show(phi.at(lam, eps)), [=, &family](const VerifyOptions& opt) {
      const auto scheme = scheme_from(opts, family, lam, eps, opt);
      return verify_learnable(family, phi, Confidence(lam), Accuracy(eps), scheme, opt);
    });
  }

  if (id == "sm.crossing") {
    const double M = o.value("M", 4.0);
    const auto p = o.value("p", std::size_t{8});
    if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
    if (p == 0) throw std::invalid_argument("p must be positive");
    const double bound = 2.0 * static_cast<double>(p) * cert.expected_x0 / M + 1.0;
    return make_claim(id, desc, nullptr, show(bound), [=, &family](const VerifyOptions& opt) {
      return verify_crossing_inequality(family, M, p, opt);
    });
  }

  if (id == "rs.chi") {
    const double lam = level(o, "lambda");
    const auto chi = ov ? BoundednessModulus::constant(*ov, kOverrideTag) : [&] {
      const auto in = rs_inputs(family);
      return rs_bsum_boundedness(in.K, in.rho, in.sigma);
    }();
    return make_claim(id, desc, chi.node(), show(chi.at(lam)), [=, &family](const VerifyOptions& opt) {
      return verify_bsum(family, chi, Confidence(lam), opt);
    });
  }

  if (id == "rm.Phi" || id == "rm.psi") {
    const double lam = level(o, "lambda");
    const double eps = level(o, "eps");
    const auto start = o.value("start_n", std::uint64_t{0});
    const auto Phi = ov ? constant_liminf(*ov) : [&] {
      const auto in = rs_inputs(family);
      return id == "rm.Phi" ? rm_Phi(family, in) : rm_Psi(family, in);
    }();
    const Track track = id == "rm.Phi" ? Track::v : Track::x;
    const auto text = ExtendedIndex::from_real(Phi.at(lam, eps, static_cast<double>(start))).to_string();
    return make_claim(id, desc, Phi.node(), text, [=, &family](const VerifyOptions& opt) {
      return verify_liminf(family, Phi, Confidence(lam), Accuracy(eps), start, opt, track);
    });
  }

  if (id == "rm.gamma") {
    const double lam = level(o, "lambda");
    const double eps = level(o, "eps");
    const auto g = counterfunction_from(o);
    if (ov) {
      const auto bound = ExtendedIndex::from_real(*ov);
      return make_claim(id, desc, make_node("constant", 0, {{"value", *ov}}, {}, kOverrideTag), bound.to_string(),
                        [=, &family](const VerifyOptions& opt) {
                          return verify_metastable(family, bound, Confidence(lam), Accuracy(eps), g, opt);
                        });
    }
    const auto in = rs_inputs(family);
    const auto phi = o.value("form", std::string("pipeline")) == "closed"
                         ? rs_learnable_closed(in.K, in.rho, in.sigma)
                         : rs_learnable_pipeline(in.K, in.rho, in.sigma);
    const auto mb = rm_metastable(phi, rm_Psi(family, in), Confidence(lam), Accuracy(eps), g);
    return make_claim(id, desc, mb.provenance, mb.gamma.to_string(), [=, &family](const VerifyOptions& opt) {
      return verify_metastable(family, mb.gamma, Confidence(lam), Accuracy(eps), g, opt, mb.f);
    });
  }

  if (id == "rm.solution") {
    const double lam = level(o, "lambda");
    const double eps = level(o, "eps");
    if (ov) {
      const auto N = ExtendedIndex::from_real(*ov);
      return make_claim(id, desc, make_node("constant", 0, {{"value", *ov}}, {}, kOverrideTag), N.to_string(),
                        [=, &family](const VerifyOptions& opt) {
                          return verify_solution_bound(family, N, Confidence(lam), Accuracy(eps), opt);
                        });
    }
    if (!cert.steps || cert.steps->kind() != Schedule::Kind::constant || !cert.L || !cert.M || !cert.delta) {
      throw std::invalid_argument("claim rm.solution needs constant steps and constant rho, sigma certificates");
    }
    rs_inputs(family);
    const double L = std::max(1.0, *cert.L);
    const double M = std::max(1.0, *cert.M);
    const double u = (*cert.steps)(0);
    const auto tree = constant_step_solution_modulus(cert.K, L, M, u, *cert.delta);
    const auto N = constant_step_solution_bound(cert.K, L, M, u, *cert.delta, Confidence(lam), Accuracy(eps));
    return make_claim(id, desc, tree.node(), N.to_string(), [=, &family](const VerifyOptions& opt) {
      return verify_solution_bound(family, N, Confidence(lam), Accuracy(eps), opt);
    });
  }

  // ns.phi
  if (ov) throw std::invalid_argument("claim ns.phi does not take an override");
  const double eps = level(o, "eps");
  if (!family.flags().is_deterministic || !cert.L || !cert.M) {
    throw std::invalid_argument("claim ns.phi needs a deterministic_rs family with L and M");
  }
  const auto nb = nonstochastic_rs(cert.K, *cert.L, *cert.M);
  return make_claim(id, desc, nb.rate.node(), show(nb.rate.at(eps)), [=, &family](const VerifyOptions& opt) {
    return verify_nonstochastic(family, Accuracy(eps), opt);
  });
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig parse_config(const std::string& text, const std::string& path) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(path, line_at(text, byte), std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError(path, 1, "config must be a JSON object");

  static const std::set<std::string> known = {"family", "claims",      "n_paths",     "horizon",
                                              "seed",   "threads",     "output_dir",  "emit_traces",
                                              "description"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError(path, line_of_key(text, key), "unknown field '" + key + "'");
  }
  const auto require = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError(path, 1, std::string("missing required field '") + key + "'");
    return j.at(key);
  };
  const auto positive_int = [&](const char* key) -> std::uint64_t {
    const auto& v = require(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      throw ConfigError(path, line_of_key(text, key), std::string(key) + " must be a positive integer");
    }
    return v.get<std::uint64_t>();
  };

  ExperimentConfig c;
  c.family = require("family");
  if (!c.family.is_object() || !c.family.contains("kind")) {
    throw ConfigError(path, line_of_key(text, "family"), "family must be an object with a \"kind\"");
  }
  c.n_paths = positive_int("n_paths");
  c.horizon = positive_int("horizon");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw ConfigError(path, line_of_key(text, "seed"), "seed must be a nonnegative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) c.threads = static_cast<unsigned>(positive_int("threads"));
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) {
      throw ConfigError(path, line_of_key(text, "output_dir"), "output_dir must be a string");
    }
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("emit_traces")) {
    const auto& e = j.at("emit_traces");
    if (e.is_boolean()) {
      c.emit_traces = e.get<bool>() ? 10 : 0;
    } else if (e.is_number_unsigned()) {
      c.emit_traces = e.get<std::size_t>();
    } else {
      throw ConfigError(path, line_of_key(text, "emit_traces"), "emit_traces must be a boolean or a count");
    }
  }

  const auto& claims = require("claims");
  const std::size_t claims_pos = text.find("\"claims\"");
  if (!claims.is_array() || claims.empty()) {
    throw ConfigError(path, line_of_key(text, "claims"), "claims must be a nonempty array");
  }
  std::size_t id_seen = 0;
  for (const auto& cl : claims) {
    ClaimSpec s;
    s.line = line_of_key(text, "id", id_seen, claims_pos);
    if (cl.is_string()) {
      s.id = cl.get<std::string>();
      s.options = json::object();
      s.line = line_of_key(text, "claims");
    } else if (cl.is_object() && cl.contains("id") && cl.at("id").is_string()) {
      s.id = cl.at("id").get<std::string>();
      s.options = cl;
      ++id_seen;
    } else {
      throw ConfigError(path, line_of_key(text, "claims"), "each claim needs a string \"id\"");
    }
    const bool known_id = std::any_of(catalog().begin(), catalog().end(), [&](const auto& p) { return p.first == s.id; });
    if (!known_id) throw ConfigError(path, s.line, "unknown claim '" + s.id + "'");
    for (const char* key : {"lambda", "eps"}) {
      if (s.options.contains(key)) {
        const auto& v = s.options.at(key);
        if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0)) {
          throw ConfigError(path, s.line, std::string(key) + " must be a number in (0, 1)");
        }
      }
    }
    for (const char* key : {"n_paths", "horizon"}) {
      if (s.options.contains(key) &&
          (!s.options.at(key).is_number_integer() || s.options.at(key).get<std::int64_t>() < 1)) {
        throw ConfigError(path, s.line, std::string(key) + " must be a positive integer");
      }
    }
    c.claims.push_back(std::move(s));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot read config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {

VerifyOptions options_for(const ExperimentConfig& c, const ClaimSpec& s) {
  VerifyOptions opt;
  opt.n_paths = s.options.value("n_paths", c.n_paths);
  opt.horizon = s.options.value("horizon", c.horizon);
  opt.seed = c.seed;
  opt.threads = c.threads;
  return opt;
}

std::vector<PlannedClaim> plan_all(const ExperimentConfig& c, const ProcessFamily& family, const std::string& path) {
  std::vector<PlannedClaim> plans;
  for (const auto& s : c.claims) {
    try {
      plans.push_back(plan_claim(family, s.id, s.options));
    } catch (const json::exception& e) {
      throw ConfigError(path, s.line, "claim " + s.id + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, s.line, "claim " + s.id + ": " + e.what());
    } catch (const std::domain_error& e) {
      throw ConfigError(path, s.line, "claim " + s.id + ": " + e.what());
    }
  }
  return plans;
}

ProcessFamily build_family(const json& descriptor, const std::string& path, std::size_t line) {
  try {
    return family_from_json(descriptor);
  } catch (const json::exception& e) {
    throw ConfigError(path, line, std::string("family: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, line, std::string("family: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(path, line, std::string("family: ") + e.what());
  }
}

VerificationReport run_planned(const PlannedClaim& plan, const VerifyOptions& opt) {
  auto r = plan.run(opt);
  r.details["procedure"] = r.claim;
  r.claim = plan.id;
  return r;
}

ExperimentConfig apply(ExperimentConfig c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.emit_traces) c.emit_traces = *o.emit_traces;
  if (o.output_dir) c.output_dir = *o.output_dir;
  // command-line sizes win over per-claim sizes as well
  for (auto& s : c.claims) {
    if (o.n_paths) s.options["n_paths"] = *o.n_paths;
    if (o.horizon) s.options["horizon"] = *o.horizon;
  }
  if (o.n_paths) c.n_paths = *o.n_paths;
  if (o.horizon) c.horizon = *o.horizon;
  return c;
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '_' && ch != '-') ch = '_';
  }
  return s;
}

}  // namespace

std::vector<VerificationReport> run_claims(const ExperimentConfig& config) {
  const auto family = build_family(config.family, "<config>", 1);
  const auto plans = plan_all(config, family, "<config>");
  std::vector<VerificationReport> out;
  for (std::size_t i = 0; i < plans.size(); ++i) out.push_back(run_planned(plans[i], options_for(config, config.claims[i])));
  return out;
}

int run_experiment(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  std::vector<PlannedClaim> plans;
  std::optional<ProcessFamily> family;
  try {
    if (overrides.n_paths && *overrides.n_paths == 0) throw ConfigError("--paths", 0, "must be at least 1");
    if (overrides.horizon && *overrides.horizon == 0) throw ConfigError("--horizon", 0, "must be at least 1");
    if (overrides.threads && *overrides.threads == 0) throw ConfigError("--threads", 0, "must be at least 1");
    config = apply(load_config(config_path), overrides);
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    family.emplace(build_family(config.family, config_path, line_of_key(ss.str(), "family")));
    plans = plan_all(config, *family, config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }

  std::string dir = "rsq_out";
  if (config.output_dir) {
    dir = *config.output_dir;
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    dir = env;
  }
  std::vector<VerificationReport> reports;
  try {
    for (std::size_t i = 0; i < plans.size(); ++i) {
      reports.push_back(run_planned(plans[i], options_for(config, config.claims[i])));
    }
  } catch (const std::invalid_argument& e) {
    err << "config error: " << config_path << ": " << e.what() << '\n';
    return 1;
  }

  fs::create_directories(fs::path(dir) / "reports");
  {
    std::ofstream fam(fs::path(dir) / "family.json");
    fam << family->describe().dump(2) << '\n';
  }
  std::ofstream summary(fs::path(dir) / "summary.csv");
  summary << VerificationReport::csv_header() << '\n';
  out << VerificationReport::csv_header() << '\n';
  std::size_t n_pass = 0, n_fail = 0, n_inc = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::ostringstream name;
    name << std::setw(2) << std::setfill('0') << (i + 1) << '_' << safe_name(r.claim) << ".json";
    std::ofstream rep(fs::path(dir) / "reports" / name.str());
    rep << r.to_json().dump(2) << '\n';
    summary << r.csv_row() << '\n';
    out << r.csv_row() << '\n';
    switch (r.verdict) {
      case Verdict::pass:
        ++n_pass;
        break;
      case Verdict::fail:
        ++n_fail;
        break;
      case Verdict::inconclusive:
        ++n_inc;
        break;
    }
  }
  if (config.emit_traces > 0) {
    fs::create_directories(fs::path(dir) / "traces");
    for (std::size_t i = 0; i < config.emit_traces; ++i) {
      std::ostringstream name;
      name << "path_" << std::setw(4) << std::setfill('0') << i << ".csv";
      std::ofstream tr(fs::path(dir) / "traces" / name.str());
      write_trace_csv(tr, family->sample(path_seed(config.seed, i), config.horizon));
    }
  }
  out << n_pass << " pass, " << n_inc << " inconclusive, " << n_fail << " fail; reports in " << dir << '\n';
  return n_fail > 0 ? 2 : 0;
}

json default_family_for(const std::string& claim_id) {
  if (claim_id.rfind("sm.", 0) == 0) {
    return {{"kind", "multiplicative_supermartingale"},
            {"u0", 1.0},
            {"factors", {{"values", {0.5, 1.5}}, {"probs", {0.5, 0.5}}}},
            {"K", 2.0}};
  }
  if (claim_id.rfind("ns.", 0) == 0) {
    return {{"kind", "deterministic_rs"},
            {"alpha", {{"kind", "geometric"}, {"c", 0.25}, {"q", 0.5}}},
            {"gamma", {{"kind", "geometric"}, {"c", 0.25}, {"q", 0.5}}},
            {"x0", 0.5},
            {"K", 1.0},
            {"M", 0.5}};
  }
  return {{"kind", "sgd_quadratic"},
          {"x0", 1.0},
          {"steps", {{"kind", "constant"}, {"u", 0.5}}},
          {"noise_sd", 1.0},
          {"noise_horizon", 16},
          {"K", 2.0}};
}

int explain_claim(const std::string& id, const std::optional<std::string>& config_path, std::ostream& out,
                  std::ostream& err) {
  const bool known = std::any_of(catalog().begin(), catalog().end(), [&](const auto& p) { return p.first == id; });
  if (!known) {
    err << "unknown claim '" << id << "'; known claims:";
    for (const auto& [k, _] : catalog()) err << ' ' << k;
    err << '\n';
    return 1;
  }
  json descriptor = default_family_for(id);
  json options = json::object();
  if (config_path) {
    try {
      const auto c = load_config(*config_path);
      descriptor = c.family;
      for (const auto& s : c.claims) {
        if (s.id == id) {
          options = s.options;
          break;
        }
      }
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return 1;
    }
  }
  try {
    const auto family = family_from_json(descriptor);
    const auto plan = plan_claim(family, id, options);
    out << plan.id << ": " << plan.description << '\n';
    out << "family: " << family.kind() << ' ' << family.parameters().dump() << '\n';
    out << "lambda = " << format_number(options.value("lambda", kDefaultLevel))
        << ", eps = " << format_number(options.value("eps", kDefaultLevel)) << ", bound = " << plan.bound_text << '\n';
    if (plan.tree) {
      out << render_tree(*plan.tree);
    } else {
      out << "(closed formula, no composition tree)\n";
    }
  } catch (const std::exception& e) {
    err << "cannot build claim " << id << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

void list_families(std::ostream& out) {
  for (const auto& [name, desc] : family_catalog()) out << name << "  " << desc << '\n';
}

}  // namespace rsq
