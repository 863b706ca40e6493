#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pfest {

/// A base measure mu and target nu on a finite support {0, ..., k-1}, together
/// with the hidden normalizer Z of the unnormalized ratio
/// lambda(x) = Z * dnu/dmu(x).
///
/// Atoms with mu = 0 and nu > 0 carry ratio +inf; their total nu-mass is kept
/// separately as the singular mass. Atoms with mu = nu = 0 carry ratio 0 and
/// are inert. Instances are immutable after construction.
class DistributionPair {
 public:
  std::size_t support_size() const noexcept { return mu_.size(); }
  std::span<const double> mu_weights() const noexcept { return mu_; }
  std::span<const double> nu_weights() const noexcept { return nu_; }
  /// dnu/dmu per atom.
  std::span<const double> ratios() const noexcept { return ratio_; }
  /// Cumulative mu table used for inverse-CDF sampling; last entry is 1.
  std::span<const double> mu_cdf() const noexcept { return cdf_; }

  double z_true() const noexcept { return z_; }
  const std::string& name() const noexcept { return name_; }

  /// nu-mass on the mu-null set.
  double singular_mass() const noexcept { return singular_mass_; }
  bool absolutely_continuous() const noexcept { return singular_mass_ == 0.0; }
  /// nu is entirely carried by the mu-null set; no sample is informative.
  bool estimation_impossible() const noexcept { return singular_mass_ >= 1.0; }

  /// lambda at an atom; +inf on mu-null atoms with nu-mass.
  double lambda(std::size_t atom) const { return z_ * ratio_.at(atom); }

  /// Same mu and nu with a different normalizer.
  DistributionPair with_z(double z) const;
  DistributionPair with_name(std::string name) const;

  friend DistributionPair make_finite_pair(std::span<const double>, std::span<const double>,
                                           double, std::string);
  friend DistributionPair pair_from_ratios(std::vector<double>, std::vector<double>,
                                           std::vector<double>, double, std::string);

 private:
  DistributionPair() = default;
  void finalize();

  std::vector<double> mu_;
  std::vector<double> nu_;
  std::vector<double> ratio_;
  std::vector<double> cdf_;
  double z_ = 1.0;
  double singular_mass_ = 0.0;
  std::string name_;
};

/// i.i.d. draws from mu with their lambda values attached.
struct SampleBatch {
  std::vector<std::uint32_t> atoms;
  std::vector<double> lambdas;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return atoms.size(); }
};

/// General pair from weight vectors. Each vector must be nonnegative and sum
/// to 1 within 1e-9; both are renormalized exactly.
DistributionPair make_finite_pair(std::span<const double> mu_weights,
                                  std::span<const double> nu_weights, double z,
                                  std::string name = "finite");

/// Pair given by mu and the ratios on mu-charged atoms; nu = mu * ratio there.
/// `null_nu` (empty, or one entry per atom) gives the nu-mass of mu-null atoms
/// and is ignored elsewhere. Ratios are stored exactly as given.
DistributionPair pair_from_ratios(std::vector<double> mu, std::vector<double> ratios,
                                  std::vector<double> null_nu, double z, std::string name);

/// Two-atom family (low, high): mu = (1-p, p), ratios (1-eps, 1+eps(1/p-1)).
/// Requires 0 < p <= 1 and 0 < eps <= 1/4.
DistributionPair make_bernoulli_pair(double p, double eps, double z);

/// mu = delta(0); nu places mass q on atom 1, which mu does not charge.
DistributionPair make_pointmass_pair(double q, double z);

/// mu = (1-p, p), nu = delta(1); ratios (0, 1/p). Requires 1/4 <= p <= 1/2.
DistributionPair make_twopoint_mu_pair(double p, double z);

/// Target reweighted by g: weights proportional to g * nu, same mu, and Z
/// scaled by nu_g = E_nu[g].
DistributionPair make_weighted_pair(const DistributionPair& pair, std::span<const double> g);

/// Random pair on `support` atoms with weights proportional to
/// (-log U)^spread; spread = 1 is a flat Dirichlet. Every atom has mu > 0.
DistributionPair make_random_pair(std::size_t support, double spread, double z,
                                  std::uint64_t seed);

/// i.i.d. draws from mu by inverse CDF. Deterministic in `seed`.
SampleBatch sample(const DistributionPair& pair, std::size_t n, std::uint64_t seed);

/// Atom index for a uniform variate u in [0, 1).
std::uint32_t atom_for_uniform(const DistributionPair& pair, double u) noexcept;

/// JSON document {"name", "mu", "nu", "z"}.
std::string to_json(const DistributionPair& pair);
DistributionPair pair_from_json(std::string_view text);
DistributionPair load_pair(const std::string& path);
void save_pair(const DistributionPair& pair, const std::string& path);

}  // namespace pfest
