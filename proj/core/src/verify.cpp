#include "rsq/verify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rsq {

namespace {

Repro make_repro(const VerifyOptions& opt, std::size_t horizon, nlohmann::json params) {
  return {opt.seed, opt.n_paths, horizon, std::move(params)};
}

void require_paths(const VerifyOptions& opt) {
  if (opt.n_paths == 0) throw std::invalid_argument("rsq: n_paths must be at least 1");
}

const std::vector<double>& track_of(const PathTrace& t, Track track) {
  return track == Track::x ? t.x : t.v;
}

// Estimates for k indicator columns over all paths.
std::vector<Estimate> column_estimates(const std::vector<std::vector<char>>& rows, std::size_t k) {
  std::vector<Estimate> out;
  out.reserve(k);
  std::vector<char> col(rows.size());
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    out.push_back(probability_from_indicators(col));
  }
  return out;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

Verdict verdict_below(const Estimate& e, double bound) {
  if (e.ci_high < bound) return Verdict::pass;
  if (e.ci_low > bound) return Verdict::fail;
  return Verdict::inconclusive;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j = {
      {"claim", claim},
      {"bound", bound_saturated ? nlohmann::json("saturated") : nlohmann::json(bound)},
      {"estimate", estimate.to_json()},
      {"verdict", to_string(verdict)},
      {"repro",
       {{"seed", repro.seed},
        {"n_paths", repro.n_paths},
        {"horizon", repro.horizon},
        {"parameters", repro.parameters}}},
      {"details", details},
      {"notes", notes},
  };
  if (!provenance.is_null()) j["provenance"] = provenance;
  return j;
}

std::string VerificationReport::csv_header() {
  return "claim,bound,point,ci_low,ci_high,n_paths,horizon,seed,verdict";
}

std::string VerificationReport::csv_row() const {
  std::ostringstream os;
  os << claim << ',' << (bound_saturated ? std::string("saturated") : format_number(bound)) << ','
     << format_number(estimate.point) << ',' << format_number(estimate.ci_low) << ','
     << format_number(estimate.ci_high) << ',' << repro.n_paths << ',' << repro.horizon << ','
     << repro.seed << ',' << to_string(verdict);
  return os.str();
}

// ---------------------------------------------------------------------------
// Interval schemes

IntervalScheme::IntervalScheme(std::string name, std::vector<Window> windows)
    : name_(std::move(name)), windows_(std::move(windows)) {
  for (std::size_t k = 0; k < windows_.size(); ++k) {
    if (!(windows_[k].first < windows_[k].second)) {
      throw std::invalid_argument("rsq: interval scheme windows need a_k < b_k");
    }
    if (k > 0 && windows_[k - 1].second > windows_[k].first) {
      throw std::invalid_argument("rsq: interval scheme windows need b_k <= a_{k+1}");
    }
  }
}

IntervalScheme IntervalScheme::dyadic(std::size_t horizon) {
  std::vector<Window> w;
  if (horizon >= 1) w.emplace_back(0, 1);
  for (std::size_t a = 1; 2 * a <= horizon; a *= 2) w.emplace_back(a, 2 * a);
  return IntervalScheme("dyadic", std::move(w));
}

IntervalScheme IntervalScheme::sliding(std::size_t width, std::size_t horizon) {
  if (width == 0) throw std::invalid_argument("rsq: sliding window width must be positive");
  std::vector<Window> w;
  for (std::size_t a = 0; a + width <= horizon; a += width) w.emplace_back(a, a + width);
  return IntervalScheme("sliding(" + std::to_string(width) + ")", std::move(w));
}

IntervalScheme IntervalScheme::greedy_pilot(const ProcessFamily& family, double eps, double threshold,
                                            const McOptions& pilot) {
  if (pilot.n_paths == 0 || pilot.horizon == 0) {
    throw std::invalid_argument("rsq: greedy scheme needs pilot paths and a positive horizon");
  }
  const auto paths = map_paths<std::vector<double>>(
      family, pilot, [](const PathTrace& t) { return t.x; });
  const std::size_t H = pilot.horizon;
  const auto need = static_cast<std::size_t>(std::ceil(threshold * static_cast<double>(paths.size())));
  std::vector<Window> w;
  std::vector<std::size_t> first_hit(paths.size());
  std::size_t a = 0;
  while (a < H) {
    // earliest b > a at which each path completes an eps-oscillation on [a; b]
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto& x = paths[i];
      double lo = x[a], hi = x[a];
      std::size_t b = a + 1;
      for (; b <= H; ++b) {
        lo = std::min(lo, x[b]);
        hi = std::max(hi, x[b]);
        if (hi - lo >= eps) break;
      }
      first_hit[i] = b;  // H + 1 when never
    }
    std::size_t b_star = H + 1;
    if (need >= 1 && need <= paths.size()) {
      std::nth_element(first_hit.begin(), first_hit.begin() + static_cast<std::ptrdiff_t>(need - 1),
                       first_hit.end());
      b_star = first_hit[need - 1];
    }
    if (b_star > H) {
      w.emplace_back(a, H);
      break;
    }
    w.emplace_back(a, b_star);
    a = b_star;
  }
  return IntervalScheme("greedy_pilot", std::move(w));
}

// ---------------------------------------------------------------------------
// Verification procedures

VerificationReport verify_boundedness(const ProcessFamily& family, const BoundednessModulus& rho,
                                      Confidence lambda, const VerifyOptions& opt) {
  require_paths(opt);
  if (opt.horizon == 0) throw std::invalid_argument("rsq: horizon must be positive");
  const double level = rho(lambda);
  VerificationReport r;
  r.claim = "boundedness";
  r.bound = level;
  r.estimate = mc_probability(
      family, [level](const PathTrace& t) { return sup_over_horizon(t.x) >= level; }, opt.mc());
  r.verdict = verdict_below(r.estimate, lambda.value());
  r.repro = make_repro(opt, opt.horizon, {{"lambda", lambda.value()}, {"family", family.describe()}});
  r.details = {{"event", "sup_{n<=horizon} |X_n| >= rho(lambda)"}, {"threshold", lambda.value()}};
  r.provenance = rho.provenance_json();
  return r;
}

VerificationReport verify_learnable(const ProcessFamily& family, const LearnableRate& phi,
                                    Confidence lambda, Accuracy eps, const IntervalScheme& scheme,
                                    const VerifyOptions& opt) {
  require_paths(opt);
  if (scheme.empty()) throw std::invalid_argument("rsq: interval scheme is empty");
  const auto& windows = scheme.windows();
  if (windows.back().second > opt.horizon) {
    throw std::invalid_argument("rsq: interval scheme exceeds the horizon");
  }
  const double e = eps.value();
  const double lam = lambda.value();
  const auto rows = map_paths<std::vector<char>>(family, opt.mc(), [&](const PathTrace& t) {
    std::vector<char> hit(windows.size());
    for (std::size_t k = 0; k < windows.size(); ++k) {
      hit[k] = oscillation_event(t.x, windows[k].first, windows[k].second, e) ? 1 : 0;
    }
    return hit;
  });
  const auto est = column_estimates(rows, windows.size());

  const double bound = phi(lambda, eps);
  std::optional<std::size_t> first_pass;
  std::size_t bad_conservative = 0;
  std::size_t bad_certain = 0;
  std::size_t worst = 0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (est[k].ci_high < lam) {
      if (!first_pass) first_pass = k;
    } else {
      ++bad_conservative;
    }
    if (est[k].ci_low > lam) ++bad_certain;
    if (est[k].point > est[worst].point) worst = k;
  }

  VerificationReport r;
  r.claim = "learnable_rate";
  r.bound = bound;
  r.estimate = est[first_pass.value_or(worst)];
  if (first_pass && static_cast<double>(*first_pass) <= bound &&
      static_cast<double>(bad_conservative) <= bound) {
    r.verdict = Verdict::pass;
  } else if (static_cast<double>(bad_certain) > bound) {
    r.verdict = Verdict::fail;
  } else {
    r.verdict = Verdict::inconclusive;
  }
  r.repro = make_repro(opt, opt.horizon,
                       {{"lambda", lam}, {"eps", e}, {"scheme", scheme.name()}, {"family", family.describe()}});
  r.details = {{"scheme", scheme.name()},
               {"windows", windows.size()},
               {"first_pass_window", first_pass ? nlohmann::json(*first_pass) : nlohmann::json(nullptr)},
               {"windows_ci_high_at_least_lambda", bad_conservative},
               {"windows_ci_low_above_lambda", bad_certain}};
  r.provenance = phi.provenance_json();
  return r;
}

VerificationReport verify_liminf(const ProcessFamily& family, const LiminfModulus& Phi,
                                 Confidence lambda, Accuracy eps, std::uint64_t start_n,
                                 const VerifyOptions& opt, Track track) {
  require_paths(opt);
  const double lam = lambda.value();
  const double e = eps.value();
  if (track == Track::v) {
    const auto probe = family.sample(path_seed(opt.seed, 0), 0);
    if (!probe.has_v()) throw std::invalid_argument("rsq: family has no V track");
  }
  EvalLog log;
  const auto len = ExtendedIndex::from_real(Phi.at(lam, e, static_cast<double>(start_n), log));

  VerificationReport r;
  r.claim = track == Track::v ? "liminf_v" : "liminf_x";
  r.notes = log.warnings;
  r.provenance = Phi.provenance_json();
  nlohmann::json params = {{"lambda", lam},
                           {"eps", e},
                           {"start_n", start_n},
                           {"track", track == Track::v ? "v" : "x"},
                           {"family", family.describe()}};
  if (len.is_saturated() || len.value() > opt.max_horizon - std::min<std::uint64_t>(start_n, opt.max_horizon)) {
    r.bound_saturated = len.is_saturated();
    r.bound = len.is_saturated() ? 0.0 : static_cast<double>(len.value());
    r.verdict = Verdict::inconclusive;
    r.repro = make_repro(opt, 0, std::move(params));
    r.details = {{"required_horizon",
                  len.is_saturated() ? nlohmann::json("saturated")
                                     : nlohmann::json(static_cast<double>(start_n) + static_cast<double>(len.value()))},
                 {"max_horizon", opt.max_horizon}};
    r.notes.push_back("window does not fit the affordable horizon");
    return r;
  }
  const std::size_t first = start_n;
  const std::size_t last = start_n + len.value();
  VerifyOptions run = opt;
  run.horizon = last;
  r.bound = static_cast<double>(len.value());
  r.estimate = mc_probability(
      family,
      [&](const PathTrace& t) {
        const auto& y = track_of(t, track);
        for (std::size_t k = first; k <= last; ++k) {
          if (y[k] < e) return false;
        }
        return true;
      },
      run.mc());
  r.verdict = verdict_below(r.estimate, lam);
  r.repro = make_repro(opt, last, std::move(params));
  r.details = {{"window", {first, last}}, {"event", "all k in window: track_k >= eps"}};
  return r;
}

VerificationReport verify_metastable(const ProcessFamily& family, const ExtendedIndex& bound,
                                     Confidence lambda, Accuracy eps, const Counterfunction& g,
                                     const VerifyOptions& opt, const std::optional<Counterfunction>& scan) {
  require_paths(opt);
  const double lam = lambda.value();
  const double e = eps.value();
  const Counterfunction& step = scan ? *scan : g;
  const std::uint64_t hmax = opt.max_horizon;

  const auto window_end = [&](std::uint64_t n) -> std::optional<std::uint64_t> {
    const auto s = g.shifted(n, hmax);
    if (s.is_saturated() || s.value() > hmax) return std::nullopt;
    return s.value();
  };

  std::vector<std::uint64_t> candidates;
  bool exhaustive = false;
  if (!bound.is_saturated() && bound.value() <= opt.exhaustive_limit && window_end(bound.value())) {
    exhaustive = true;
    for (std::uint64_t n = 0; n <= bound.value(); ++n) {
      if (!window_end(n)) {
        exhaustive = false;
        break;
      }
      candidates.push_back(n);
    }
  }
  if (!exhaustive) {
    candidates.clear();
    std::uint64_t n = 0;
    while (candidates.size() < opt.max_candidates) {
      if (bound.exceeds(n) || (!bound.is_saturated() && n == bound.value())) {
        if (!window_end(n)) break;
        candidates.push_back(n);
      } else {
        break;
      }
      const auto next = step.shifted(n, hmax);
      if (next.is_saturated() || next.value() <= n) break;
      n = next.value();
    }
  }

  VerificationReport r;
  r.claim = "metastable";
  r.bound_saturated = bound.is_saturated();
  r.bound = bound.is_saturated() ? 0.0 : static_cast<double>(bound.value());
  nlohmann::json params = {{"lambda", lam}, {"eps", e}, {"g", g.provenance().tag()},
                           {"family", family.describe()}};
  if (candidates.empty()) {
    r.verdict = Verdict::inconclusive;
    r.repro = make_repro(opt, 0, std::move(params));
    r.notes.push_back("no candidate window fits the affordable horizon");
    return r;
  }

  std::vector<std::uint64_t> ends;
  for (auto n : candidates) ends.push_back(*window_end(n));

  // Simulate in stages of doubling horizon and stop at the first witness;
  // prefix-exact sampling makes each stage consistent with the previous one.
  std::vector<Estimate> est;
  std::optional<std::size_t> pass_at;
  std::uint64_t horizon = 0;
  std::size_t done = 0;
  while (done < candidates.size() && !pass_at) {
    std::uint64_t stage = std::max<std::uint64_t>(ends[done], 2 * horizon);
    std::size_t upto = done;
    std::uint64_t stage_end = 0;
    while (upto < candidates.size() && ends[upto] <= stage) stage_end = std::max(stage_end, ends[upto++]);
    const std::size_t first = done;
    VerifyOptions run = opt;
    run.horizon = stage_end;
    const auto rows = map_paths<std::vector<char>>(family, run.mc(), [&](const PathTrace& t) {
      // prefix[k] = #{j < k : X_j >= eps}
      std::vector<std::uint32_t> prefix(t.x.size() + 1, 0);
      for (std::size_t k = 0; k < t.x.size(); ++k) prefix[k + 1] = prefix[k] + (t.x[k] >= e ? 1 : 0);
      std::vector<char> hit(upto - first);
      for (std::size_t c = first; c < upto; ++c) {
        hit[c - first] = prefix[ends[c] + 1] - prefix[candidates[c]] > 0 ? 1 : 0;
      }
      return hit;
    });
    for (const auto& es : column_estimates(rows, upto - first)) {
      if (!pass_at && es.ci_high < lam) pass_at = est.size();
      est.push_back(es);
    }
    horizon = std::max(horizon, stage_end);
    done = upto;
  }

  std::size_t best = 0;
  bool all_above = est.size() == candidates.size();
  for (std::size_t c = 0; c < est.size(); ++c) {
    if (est[c].ci_high < est[best].ci_high) best = c;
    if (!(est[c].ci_low > lam)) all_above = false;
  }
  r.estimate = est[pass_at.value_or(best)];
  if (pass_at) {
    r.verdict = Verdict::pass;
  } else if (exhaustive && all_above) {
    r.verdict = Verdict::fail;
  } else {
    r.verdict = Verdict::inconclusive;
  }
  r.repro = make_repro(opt, horizon, std::move(params));
  r.details = {{"candidates", candidates.size()},
               {"candidates_simulated", est.size()},
               {"exhaustive", exhaustive},
               {"witness_n", pass_at ? nlohmann::json(candidates[*pass_at]) : nlohmann::json(nullptr)},
               {"scanned_up_to", candidates[est.size() - 1]}};
  r.provenance = to_json(bound.is_saturated() ? g.provenance() : step.provenance());
  return r;
}

VerificationReport verify_crossing_inequality(const ProcessFamily& family, double M, std::size_t p,
                                              const VerifyOptions& opt) {
  require_paths(opt);
  if (p == 0) throw std::invalid_argument("rsq: partition size p must be positive");
  if (!(M > 0.0)) throw std::invalid_argument("rsq: M must be positive");
  if (!family.flags().is_supermartingale) {
    throw std::invalid_argument("rsq: crossing inequality needs a certified nonnegative supermartingale");
  }
  const double bound = 2.0 * static_cast<double>(p) * family.certificate().expected_x0 / M + 1.0;
  const auto rows = map_paths<std::vector<double>>(family, opt.mc(), [&](const PathTrace& t) {
    std::vector<double> cs(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double a = M * static_cast<double>(j) / static_cast<double>(p);
      const double b = M * static_cast<double>(j + 1) / static_cast<double>(p);
      cs[j] = static_cast<double>(count_crossings(t.x, a, b).crossings);
    }
    return cs;
  });
  std::vector<Estimate> est;
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    est.push_back(normal_interval(col));
  }
  std::size_t worst = 0;
  bool any_fail = false;
  for (std::size_t j = 0; j < p; ++j) {
    if (est[j].ci_high > est[worst].ci_high) worst = j;
    if (est[j].ci_low > bound) any_fail = true;
  }
  VerificationReport r;
  r.claim = "crossing_inequality";
  r.bound = bound;
  r.estimate = est[worst];
  r.verdict = any_fail ? Verdict::fail : (est[worst].ci_high < bound ? Verdict::pass : Verdict::inconclusive);
  r.repro = make_repro(opt, opt.horizon, {{"M", M}, {"p", p}, {"family", family.describe()}});
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t j = 0; j < p; ++j) cells.push_back(est[j].to_json());
  r.details = {{"cells", cells}, {"worst_cell", worst}};
  return r;
}

VerificationReport verify_bsum(const ProcessFamily& family, const BoundednessModulus& chi,
                               Confidence lambda, const VerifyOptions& opt) {
  require_paths(opt);
  if (opt.horizon == 0) throw std::invalid_argument("rsq: horizon must be positive");
  if (!family.sample(path_seed(opt.seed, 0), 0).has_b()) {
    throw std::invalid_argument("rsq: family has no B track");
  }
  const double level = chi(lambda);
  VerificationReport r;
  r.claim = "bsum_boundedness";
  r.bound = level;
  r.estimate = mc_probability(
      family,
      [&](const PathTrace& t) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.horizon; ++i) s += t.b[i];
        return s >= level;
      },
      opt.mc());
  r.verdict = verdict_below(r.estimate, lambda.value());
  r.repro = make_repro(opt, opt.horizon, {{"lambda", lambda.value()}, {"family", family.describe()}});
  r.details = {{"event", "sum_{i<horizon} B_i >= chi(lambda)"}, {"threshold", lambda.value()}};
  r.provenance = chi.provenance_json();
  return r;
}

VerificationReport verify_solution_bound(const ProcessFamily& family, const ExtendedIndex& N,
                                         Confidence lambda, Accuracy eps, const VerifyOptions& opt) {
  require_paths(opt);
  const double lam = lambda.value();
  const double e = eps.value();
  VerificationReport r;
  r.claim = "solution_bound";
  nlohmann::json params = {{"lambda", lam}, {"eps", e}, {"family", family.describe()}};
  if (N.is_saturated() || N.value() > opt.max_horizon) {
    r.bound_saturated = N.is_saturated();
    r.bound = N.is_saturated() ? 0.0 : static_cast<double>(N.value());
    r.verdict = Verdict::inconclusive;
    r.repro = make_repro(opt, 0, std::move(params));
    r.notes.push_back("bound does not fit the affordable horizon");
    return r;
  }
  const std::size_t n = N.value();
  VerifyOptions run = opt;
  run.horizon = n;
  r.bound = static_cast<double>(n);
  r.estimate = mc_probability(
      family,
      [&](const PathTrace& t) {
        for (double v : t.x) {
          if (v < e) return false;
        }
        return true;
      },
      run.mc());
  r.verdict = verdict_below(r.estimate, lam);
  r.repro = make_repro(opt, n, std::move(params));
  r.details = {{"event", "all k <= N: X_k >= eps"},
               {"solution_found_probability", 1.0 - r.estimate.point}};
  return r;
}

VerificationReport verify_nonstochastic(const ProcessFamily& family, Accuracy eps, const VerifyOptions& opt) {
  const auto& cert = family.certificate();
  if (!family.flags().is_deterministic || !cert.L || !cert.M) {
    throw std::invalid_argument("rsq: nonstochastic check needs a deterministic family with L and M");
  }
  const auto bounds = nonstochastic_rs(cert.K, *cert.L, *cert.M);
  const auto t = family.sample(opt.seed, opt.horizon);
  const double J = static_cast<double>(count_fluctuations(t.x, eps.value()));
  double beta_sum = 0.0;
  for (std::size_t i = 0; i < t.horizon; ++i) beta_sum += t.b[i];
  const double bound = bounds.rate(eps);

  VerificationReport r;
  r.claim = "nonstochastic_rate";
  r.bound = bound;
  r.estimate = {J, J, J, 1, CiMethod::normal};
  r.verdict = (J <= bound && beta_sum < bounds.beta_sum_bound) ? Verdict::pass : Verdict::fail;
  r.repro = {opt.seed, 1, opt.horizon, {{"eps", eps.value()}, {"family", family.describe()}}};
  r.details = {{"fluctuations", J},
               {"beta_sum", beta_sum},
               {"beta_sum_bound", bounds.beta_sum_bound},
               {"clamp_events", t.clamp_events}};
  r.provenance = bounds.rate.provenance_json();
  return r;
}

}  // namespace rsq
