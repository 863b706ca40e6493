#include "pfest/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "pfest/errors.hpp"

namespace pfest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_M(double M) {
  if (!(M >= 0.0) || std::isnan(M)) throw std::domain_error("M must be nonnegative");
}

void check_unit_open(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error(std::string(what) + " must lie in (0, 1)");
}

}  // namespace

CoverageProfile::CoverageProfile(const DistributionPair& pair)
    : singular_mass_(pair.singular_mass()), source_(pair.name()) {
  const auto mu = pair.mu_weights();
  const auto nu = pair.nu_weights();
  const auto r = pair.ratios();

  // Group mu-charged atoms by ratio value.
  std::map<double, std::pair<double, double>> by_ratio;  // ratio -> (nu mass, mu mass)
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] == 0.0) continue;
    auto& slot = by_ratio[r[i]];
    slot.first += nu[i];
    slot.second += mu[i];
  }

  const std::size_t k = by_ratio.size();
  thresholds_.reserve(k);
  std::vector<double> nu_mass, mu_mass;
  for (const auto& [ratio, masses] : by_ratio) {
    thresholds_.push_back(ratio);
    nu_mass.push_back(masses.first);
    mu_mass.push_back(masses.second);
  }

  nu_tail_.assign(k, 0.0);
  mu_tail_.assign(k, 0.0);
  double nu_acc = 0.0, mu_acc = 0.0;
  for (std::size_t j = k; j-- > 0;) {
    nu_acc += nu_mass[j];
    mu_acc += mu_mass[j];
    nu_tail_[j] = nu_acc;
    mu_tail_[j] = mu_acc;
  }

  nu_r_below_.assign(k + 1, 0.0);
  for (std::size_t j = 0; j < k; ++j) nu_r_below_[j + 1] = nu_r_below_[j] + nu_mass[j] * thresholds_[j];
}

std::size_t CoverageProfile::first_at_or_above(double M) const {
  return static_cast<std::size_t>(std::lower_bound(thresholds_.begin(), thresholds_.end(), M) -
                                  thresholds_.begin());
}

double CoverageProfile::coverage(double M) const {
  check_M(M);
  const std::size_t j = first_at_or_above(M);
  const double ac = j < nu_tail_.size() ? nu_tail_[j] : 0.0;
  return std::min(1.0, ac + singular_mass_);
}

double CoverageProfile::integrated_coverage(double M) const {
  check_M(M);
  const std::size_t j = first_at_or_above(M);
  const double tail = (j < nu_tail_.size() ? nu_tail_[j] : 0.0) + singular_mass_;
  return nu_r_below_[j] + M * tail;
}

double CoverageProfile::mu_tail(double M) const {
  check_M(M);
  const std::size_t j = first_at_or_above(M);
  return j < mu_tail_.size() ? mu_tail_[j] : 0.0;
}

double CoverageProfile::truncated_second_moment(double M) const {
  check_M(M);
  // nu_i r_i = mu_i r_i^2 on mu-charged atoms.
  const auto j = static_cast<std::size_t>(
      std::upper_bound(thresholds_.begin(), thresholds_.end(), M) - thresholds_.begin());
  return nu_r_below_[j];
}

double coverage(const CoverageProfile& profile, double M) { return profile.coverage(M); }

double integrated_coverage(const CoverageProfile& profile, double M) {
  return profile.integrated_coverage(M);
}

double solve_ic_level(const CoverageProfile& profile, double target) {
  check_unit_open(target, "IC level target");
  const double sing = profile.singular_mass();
  if (sing >= target)
    throw SingularPairError("no finite M: singular mass " + std::to_string(sing) +
                            " keeps IC_M/M above " + std::to_string(target));
  const auto th = profile.thresholds();
  const auto nu_tail = profile.nu_tail_masses();

  // IC_M/M is 1 up to the smallest positive ratio. On (t_j, t_{j+1}] it equals
  // A_j/M + T_j with A_j = sum of nu*r below t_{j+1} and T_j the nu-mass at or
  // above t_{j+1}; solve each segment in closed form.
  double A = 0.0;
  for (std::size_t j = 0; j < th.size(); ++j) {
    const double nu_here = nu_tail[j] - (j + 1 < th.size() ? nu_tail[j + 1] : 0.0);
    A += nu_here * th[j];
    if (th[j] == 0.0) continue;
    const double T = (j + 1 < th.size() ? nu_tail[j + 1] : 0.0) + sing;
    if (T >= target) continue;
    const double hi = j + 1 < th.size() ? th[j + 1] : kInf;
    const double m = std::max(th[j], A / (target - T));
    if (m <= hi) return m;
  }
  // Only zero-ratio atoms and singular mass remain: IC_M = M * sing.
  throw SingularPairError("no finite M solves the IC level equation");
}

double solve_M_eps(const CoverageProfile& profile, double eps) {
  check_unit_open(eps, "eps");
  if (profile.singular_mass() > 0.0)
    throw SingularPairError("nu is not absolutely continuous w.r.t. mu; no finite M_eps");
  return solve_ic_level(profile, eps);
}

double solve_coverage_level(const CoverageProfile& profile, double target) {
  if (!(target >= 0.0)) throw std::domain_error("coverage target must be nonnegative");
  if (target >= 1.0) return 0.0;
  const double sing = profile.singular_mass();
  if (sing > target)
    throw SingularPairError("singular mass " + std::to_string(sing) + " exceeds coverage target " +
                            std::to_string(target));
  const auto th = profile.thresholds();
  const auto nu_tail = profile.nu_tail_masses();
  // Cov on (t_j, t_{j+1}] is the nu-mass at or above t_{j+1}.
  for (std::size_t j = 0; j < th.size(); ++j) {
    const double T = (j + 1 < th.size() ? nu_tail[j + 1] : 0.0) + sing;
    if (T <= target) return th[j];
  }
  return 0.0;
}

double coverage_bound_fdiv(const FGenerator& f, double divergence, double M) {
  if (!(M > 1.0)) throw std::domain_error("coverage_bound_fdiv: M must exceed 1");
  if (!(divergence >= 0.0)) throw std::domain_error("divergence must be nonnegative");
  const double fM = f(M);
  if (!(fM > 0.0)) throw std::domain_error("coverage_bound_fdiv: f(M) must be positive");
  if (divergence == 0.0) return 0.0;
  return std::min(1.0, M * divergence / fM);
}

double icov_bound_fdiv(const FGenerator& f, double divergence, double M, double c) {
  if (!(c >= 1.0)) throw std::domain_error("icov_bound_fdiv: c must be at least 1");
  if (!(M >= c)) throw std::domain_error("icov_bound_fdiv: M must be at least c");
  if (!(divergence >= 0.0)) throw std::domain_error("divergence must be nonnegative");
  const double head = c * c / M;
  if (divergence == 0.0) return head;
  const double fM = f(M);
  if (!(fM > 0.0)) return kInf;
  return head + M * divergence / fM;
}

double truncated_second_moment(const DistributionPair& pair, double M) {
  check_M(M);
  const auto mu = pair.mu_weights();
  const auto r = pair.ratios();
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0.0 && r[i] <= M) sum += mu[i] * r[i] * r[i];
  return sum;
}

MuTailBound mu_tail_bound(const CoverageProfile& profile, double M) {
  if (!(M >= 1.0)) throw std::domain_error("mu_tail_bound: M must be at least 1");
  return {std::clamp(profile.coverage(M) / M, 0.0, 1.0), profile.mu_tail(M)};
}

PaleyZygmundBound paley_zygmund_lower_bound(const CoverageProfile& profile, double eps, double u) {
  check_unit_open(eps, "eps");
  check_unit_open(u, "u");
  if (profile.singular_mass() > 0.0)
    throw SingularPairError("Paley-Zygmund bound needs an absolutely continuous pair");
  const double M = solve_coverage_level(profile, u * eps);
  return {std::clamp((1.0 - u) * eps / M, 0.0, 1.0), M};
}

PaleyZygmundBound paley_zygmund_lower_bound_fdiv(const FGenerator& f, double divergence,
                                                 double eps, double u) {
  check_unit_open(eps, "eps");
  check_unit_open(u, "u");
  if (!(divergence >= 0.0)) throw std::domain_error("divergence must be nonnegative");
  const double M = std::isinf(divergence) ? kInf : gamma_f(f, divergence / (u * eps));
  if (std::isinf(M)) return {0.0, M};
  return {std::clamp((1.0 - u) * eps / M, 0.0, 1.0), M};
}

}  // namespace pfest
