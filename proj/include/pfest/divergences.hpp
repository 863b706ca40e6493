#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "pfest/distributions.hpp"

namespace pfest {

/// Growth class of t -> f(t) as t -> infinity.
enum class Regime {
  Linear,                   // f(t)/t bounded: estimation impossible in general
  SubquadraticSuperlinear,  // f(t)/t unbounded, f(t)/t^2 bounded
  Superquadratic,           // f(t)/t^2 unbounded
};

std::string_view to_string(Regime regime) noexcept;

/// Convex generator f on [0, inf) with f(1) = f'(1) = 0.
///
/// `c_threshold` is the level c >= 1 beyond which f(t)/t^2 is treated as
/// non-increasing by the f-divergence planner. Built-ins ship analytic values;
/// custom generators get a grid estimate unless one is declared.
class FGenerator {
 public:
  using Fn = std::function<double(double)>;

  static FGenerator total_variation();
  /// t log t - t + 1 (the shifted form; divergence values equal textbook KL).
  static FGenerator kl();
  static FGenerator chi_squared();
  /// t^alpha - alpha (t - 1) - 1 for alpha > 1.
  static FGenerator renyi(double alpha);
  /// (sqrt(t) - 1)^2.
  static FGenerator hellinger();
  /// Generator from a callable. Without a declared regime the regime is probed
  /// numerically; without a declared threshold it is estimated on a grid.
  static FGenerator custom(std::string name, Fn f, double f_prime_at_inf,
                           std::optional<Regime> regime = std::nullopt,
                           std::optional<double> c_threshold = std::nullopt);

  double operator()(double t) const { return f_(t); }
  /// lim f(t)/t, possibly +inf.
  double f_prime_at_inf() const noexcept { return f_prime_at_inf_; }
  std::optional<Regime> declared_regime() const noexcept { return declared_; }
  double c_threshold() const noexcept { return c_threshold_; }
  const std::string& name() const noexcept { return name_; }

 private:
  FGenerator(std::string name, Fn f, double fpi, std::optional<Regime> regime, double c)
      : name_(std::move(name)), f_(std::move(f)), f_prime_at_inf_(fpi), declared_(regime),
        c_threshold_(c) {}

  std::string name_;
  Fn f_;
  double f_prime_at_inf_;
  std::optional<Regime> declared_;
  double c_threshold_;
};

/// Parses "tv", "kl", "chi2", "hellinger" or "renyi:alpha=<a>".
FGenerator parse_generator(std::string_view text);

/// Exact D_f(nu || mu): sum over mu-charged atoms of mu_i f(r_i), plus
/// singular mass times f'(inf). +inf when the singular term is infinite.
double f_divergence(const DistributionPair& pair, const FGenerator& f);

/// gamma_f(M) = inf{t >= 1 : f(t)/t >= M}; +inf when M exceeds sup f(t)/t.
double gamma_f(const FGenerator& f, double M);

/// Declared regime when present, otherwise `probe_regime`.
Regime classify_regime(const FGenerator& f);

/// Regime from growth of f(t)/t and f(t)/t^2 between the probes 1e6 and 1e9.
/// Throws ClassificationError when a probe overflows.
Regime probe_regime(const FGenerator::Fn& f);

/// Grid point just past the last increase of f(t)/t^2 on a geometric grid over
/// [1, 1e8]; +inf when f(t)/t^2 is still increasing at the end of the grid.
double estimate_c_threshold(const FGenerator::Fn& f);

namespace regime_probe {
inline constexpr double kLowProbe = 1e3;
inline constexpr double kMidProbe = 1e6;
inline constexpr double kHighProbe = 1e9;
inline constexpr double kGrowthFactor = 1.01;
}  // namespace regime_probe

}  // namespace pfest
