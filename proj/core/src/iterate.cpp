#include "rsq/iterate.hpp"

#include <cmath>
#include <stdexcept>

namespace rsq {

namespace {

bool is_constant_map(const Node& g) {
  return g.rule() == "constant" || (g.rule() == "affine" && g.param("slope") == 0.0);
}

double eval_index(const Node& g, std::uint64_t n, EvalLog* log) {
  const double v = evaluate(g, {static_cast<double>(n)}, log);
  if (std::isnan(v) || v < 0.0) {
    throw std::domain_error("rsq: counterfunction produced a negative or NaN index");
  }
  return v;
}

}  // namespace

IterateResult iterate_shifted(const Node& g, double count, std::uint64_t cap, EvalLog* log) {
  if (std::isnan(count) || count < 0.0) {
    throw std::domain_error("rsq: iteration count must be a nonnegative number");
  }
  const double steps_real = std::ceil(count);
  const bool unbounded = !(steps_real < 1.8e19);
  const std::uint64_t steps = unbounded ? 0 : static_cast<std::uint64_t>(steps_real);

  IterateResult out;
  if (is_constant_map(g)) {
    const double k = std::floor(eval_index(g, 0, log));
    if (k == 0.0) return out;
    if (unbounded || static_cast<double>(steps) * k > static_cast<double>(cap)) {
      out.saturated = true;
      out.value = cap;
      return out;
    }
    out.value = steps * static_cast<std::uint64_t>(k);
    out.iterations = steps;
    return out;
  }

  std::uint64_t n = 0;
  for (std::uint64_t i = 0; unbounded || i < steps; ++i) {
    const double gv = std::floor(eval_index(g, n, log));
    if (gv > static_cast<double>(cap - n)) {
      out.saturated = true;
      out.value = cap;
      out.iterations = i + 1;
      return out;
    }
    const auto step = static_cast<std::uint64_t>(gv);
    if (step == 0) break;  // fixed point of g~
    n += step;
    out.iterations = i + 1;
  }
  out.value = n;
  return out;
}

}  // namespace rsq
