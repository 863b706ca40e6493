#include "pfest/divergences.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pfest/errors.hpp"

namespace pfest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// gamma_f search: doubling from [1, 2] up to kGammaCeiling, then bisection to
// relative width kGammaRelTol.
constexpr double kGammaCeiling = 1e300;
constexpr double kGammaRelTol = 1e-10;

double ratio_over_t(const FGenerator& f, double t) { return f(t) / t; }

}  // namespace

std::string_view to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::Linear:
      return "linear";
    case Regime::SubquadraticSuperlinear:
      return "subquadratic-superlinear";
    case Regime::Superquadratic:
      return "superquadratic";
  }
  return "unknown";
}

FGenerator FGenerator::total_variation() {
  return {"tv", [](double t) { return 0.5 * std::abs(t - 1.0); }, 0.5, Regime::Linear, 1.0};
}

FGenerator FGenerator::kl() {
  return {"kl",
          [](double t) { return t > 0.0 ? t * std::log(t) - t + 1.0 : 1.0; },
          kInf,
          Regime::SubquadraticSuperlinear,
          1.0};
}

FGenerator FGenerator::chi_squared() {
  return {"chi2", [](double t) { return (t - 1.0) * (t - 1.0); }, kInf,
          Regime::SubquadraticSuperlinear, 1.0};
}

FGenerator FGenerator::renyi(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw std::domain_error("renyi generator needs a finite alpha > 1");
  // No finite threshold exists once f(t)/t^2 grows without bound (alpha > 2);
  // the planner then uses c = 1 and the 1/eps^2 term.
  const Regime regime = alpha > 2.0 ? Regime::Superquadratic : Regime::SubquadraticSuperlinear;
  std::string name = "renyi:alpha=";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, alpha);
  name.append(buf, end);
  return {std::move(name),
          [alpha](double t) { return std::pow(t, alpha) - alpha * (t - 1.0) - 1.0; },
          kInf,
          regime,
          1.0};
}

FGenerator FGenerator::hellinger() {
  return {"hellinger",
          [](double t) {
            const double s = std::sqrt(t) - 1.0;
            return s * s;
          },
          1.0, Regime::Linear, 1.0};
}

FGenerator FGenerator::custom(std::string name, Fn f, double f_prime_at_inf,
                              std::optional<Regime> regime, std::optional<double> c_threshold) {
  if (!f) throw std::invalid_argument("custom generator needs a callable");
  const double c = c_threshold ? *c_threshold : estimate_c_threshold(f);
  if (!(c >= 1.0)) throw std::domain_error("c threshold must be at least 1");
  return {std::move(name), std::move(f), f_prime_at_inf, regime, c};
}

FGenerator parse_generator(std::string_view text) {
  if (text == "tv") return FGenerator::total_variation();
  if (text == "kl") return FGenerator::kl();
  if (text == "chi2") return FGenerator::chi_squared();
  if (text == "hellinger") return FGenerator::hellinger();
  constexpr std::string_view renyi_prefix = "renyi:alpha=";
  if (text.starts_with(renyi_prefix)) {
    const std::string_view value = text.substr(renyi_prefix.size());
    double alpha = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), alpha);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw std::invalid_argument("bad renyi alpha in '" + std::string(text) + "'");
    return FGenerator::renyi(alpha);
  }
  throw std::invalid_argument("unknown divergence '" + std::string(text) +
                              "' (expected tv, kl, chi2, hellinger or renyi:alpha=<a>)");
}

double f_divergence(const DistributionPair& pair, const FGenerator& f) {
  const auto mu = pair.mu_weights();
  const auto r = pair.ratios();
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0.0) sum += mu[i] * f(r[i]);
  if (pair.singular_mass() > 0.0) {
    if (std::isinf(f.f_prime_at_inf())) return kInf;
    sum += pair.singular_mass() * f.f_prime_at_inf();
  }
  return sum;
}

double gamma_f(const FGenerator& f, double M) {
  if (!(M >= 0.0)) throw std::domain_error("gamma_f: M must be nonnegative");
  if (ratio_over_t(f, 1.0) >= M) return 1.0;
  // f(t)/t stays strictly below its limit f'(inf).
  if (M >= f.f_prime_at_inf()) return kInf;

  double lo = 1.0;
  double hi = 2.0;
  while (!(ratio_over_t(f, hi) >= M)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kGammaCeiling) return kInf;
  }
  // Invariant: f(lo)/lo < M <= f(hi)/hi.
  while (hi - lo > kGammaRelTol * hi) {
    const double mid = lo + 0.5 * (hi - lo);
    if (ratio_over_t(f, mid) >= M)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

Regime probe_regime(const FGenerator::Fn& f) {
  using namespace regime_probe;
  const double probes[] = {kLowProbe, kMidProbe, kHighProbe};
  double linear_growth = kInf;
  double quadratic_growth = kInf;
  double prev_t = 0.0, prev_f = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double t = probes[i];
    const double v = f(t);
    if (!std::isfinite(v)) throw ClassificationError("f overflowed while probing regime");
    if (i > 0) {
      // Ratios of f(t)/t and f(t)/t^2 between consecutive probes.
      const double lin = (prev_f == 0.0) ? (v == 0.0 ? 1.0 : kInf) : (v / t) / (prev_f / prev_t);
      const double quad = lin * prev_t / t;
      linear_growth = std::min(linear_growth, lin);
      quadratic_growth = std::min(quadratic_growth, quad);
    }
    prev_t = t;
    prev_f = v;
  }
  if (linear_growth < kGrowthFactor) return Regime::Linear;
  if (quadratic_growth > kGrowthFactor) return Regime::Superquadratic;
  return Regime::SubquadraticSuperlinear;
}

Regime classify_regime(const FGenerator& f) {
  if (f.declared_regime()) return *f.declared_regime();
  return probe_regime([&f](double t) { return f(t); });
}

double estimate_c_threshold(const FGenerator::Fn& f) {
  constexpr double kStep = 1.01;
  constexpr double kEnd = 1e8;
  double last_increase_end = 1.0;
  double prev = f(1.0);
  double t = 1.0;
  bool increasing_at_end = false;
  while (t < kEnd) {
    const double next_t = t * kStep;
    const double v = f(next_t) / (next_t * next_t);
    if (!std::isfinite(v)) return kInf;
    increasing_at_end = v > prev;
    if (increasing_at_end) last_increase_end = next_t;
    prev = v;
    t = next_t;
  }
  return increasing_at_end ? kInf : last_increase_end;
}

}  // namespace pfest
