#include "pfest/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pfest/rng.hpp"

namespace pfest {

namespace {

constexpr double kWeightSumTolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_weights(std::span<const double> w, const char* label) {
  if (w.empty()) throw std::invalid_argument(std::string(label) + ": empty weight vector");
  double sum = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw std::invalid_argument(std::string(label) + ": weights must be finite and nonnegative");
    sum += x;
  }
  if (sum == 0.0) throw std::invalid_argument(std::string(label) + ": weights sum to zero");
  if (std::abs(sum - 1.0) > kWeightSumTolerance)
    throw std::invalid_argument(std::string(label) + ": weights sum to " + std::to_string(sum) +
                                ", expected 1 within 1e-9");
}

std::vector<double> normalized(std::span<const double> w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> out(w.begin(), w.end());
  for (double& x : out) x /= sum;
  return out;
}

void check_z(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw std::domain_error("normalizer z must be positive and finite");
}

}  // namespace

void DistributionPair::finalize() {
  cdf_.resize(mu_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    acc += mu_[i];
    cdf_[i] = acc;
  }
  // Pin the tail so u in [0, 1) always lands on a mu-charged atom.
  for (std::size_t i = mu_.size(); i-- > 0;) {
    if (mu_[i] > 0.0) {
      for (std::size_t j = i; j < mu_.size(); ++j) cdf_[j] = 1.0;
      break;
    }
  }
  singular_mass_ = 0.0;
  for (std::size_t i = 0; i < mu_.size(); ++i)
    if (mu_[i] == 0.0) singular_mass_ += nu_[i];
}

DistributionPair DistributionPair::with_z(double z) const {
  check_z(z);
  DistributionPair out = *this;
  out.z_ = z;
  return out;
}

DistributionPair DistributionPair::with_name(std::string name) const {
  DistributionPair out = *this;
  out.name_ = std::move(name);
  return out;
}

DistributionPair make_finite_pair(std::span<const double> mu_weights,
                                  std::span<const double> nu_weights, double z, std::string name) {
  if (mu_weights.size() != nu_weights.size())
    throw std::invalid_argument("mu and nu must have the same support size");
  check_weights(mu_weights, "mu");
  check_weights(nu_weights, "nu");
  check_z(z);

  DistributionPair pair;
  pair.mu_ = normalized(mu_weights);
  pair.nu_ = normalized(nu_weights);
  pair.z_ = z;
  pair.name_ = std::move(name);
  pair.ratio_.resize(pair.mu_.size());
  for (std::size_t i = 0; i < pair.mu_.size(); ++i) {
    if (pair.mu_[i] > 0.0)
      pair.ratio_[i] = pair.nu_[i] / pair.mu_[i];
    else
      pair.ratio_[i] = pair.nu_[i] > 0.0 ? kInf : 0.0;
  }
  pair.finalize();
  return pair;
}

DistributionPair pair_from_ratios(std::vector<double> mu, std::vector<double> ratios,
                                  std::vector<double> null_nu, double z, std::string name) {
  if (mu.size() != ratios.size() || (!null_nu.empty() && null_nu.size() != mu.size()))
    throw std::invalid_argument("mu, ratios and null masses must have the same support size");
  check_weights(mu, "mu");
  check_z(z);

  DistributionPair pair;
  pair.nu_.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0) {
      if (!(ratios[i] >= 0.0) || !std::isfinite(ratios[i]))
        throw std::invalid_argument("ratios on mu-charged atoms must be finite and nonnegative");
      pair.nu_[i] = mu[i] * ratios[i];
    } else {
      const double m = null_nu.empty() ? 0.0 : null_nu[i];
      if (!(m >= 0.0)) throw std::invalid_argument("null-atom masses must be nonnegative");
      pair.nu_[i] = m;
      ratios[i] = m > 0.0 ? kInf : 0.0;
    }
  }
  check_weights(pair.nu_, "nu");
  pair.mu_ = std::move(mu);
  pair.ratio_ = std::move(ratios);
  pair.z_ = z;
  pair.name_ = std::move(name);
  pair.finalize();
  return pair;
}

DistributionPair make_bernoulli_pair(double p, double eps, double z) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("bernoulli pair: p must lie in (0, 1]");
  if (!(eps > 0.0 && eps <= 0.25)) throw std::domain_error("bernoulli pair: eps must lie in (0, 1/4]");
  std::ostringstream name;
  name << "bernoulli(p=" << p << ",eps=" << eps << ")";
  return pair_from_ratios({1.0 - p, p}, {1.0 - eps, 1.0 + eps * (1.0 / p - 1.0)}, {}, z,
                          name.str());
}

DistributionPair make_pointmass_pair(double q, double z) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("point-mass pair: q must lie in [0, 1]");
  std::ostringstream name;
  name << "pointmass(q=" << q << ")";
  return pair_from_ratios({1.0, 0.0}, {1.0 - q, 0.0}, {0.0, q}, z, name.str());
}

DistributionPair make_twopoint_mu_pair(double p, double z) {
  if (!(p >= 0.25 && p <= 0.5)) throw std::domain_error("two-point pair: p must lie in [1/4, 1/2]");
  std::ostringstream name;
  name << "twopoint(p=" << p << ")";
  return pair_from_ratios({1.0 - p, p}, {0.0, 1.0 / p}, {}, z, name.str());
}

DistributionPair make_weighted_pair(const DistributionPair& pair, std::span<const double> g) {
  if (g.size() != pair.support_size())
    throw std::invalid_argument("weighting function must have one value per atom");
  double nu_g = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] >= 0.0) || !std::isfinite(g[i]))
      throw std::invalid_argument("weighting function must be finite and nonnegative");
    nu_g += g[i] * pair.nu_weights()[i];
  }
  if (!(nu_g > 0.0)) throw std::domain_error("weighting function has zero mean under nu");

  const auto mu = pair.mu_weights();
  const auto nu = pair.nu_weights();
  const auto r = pair.ratios();
  std::vector<double> ratios(mu.size());
  std::vector<double> null_nu(mu.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0)
      ratios[i] = g[i] * r[i] / nu_g;
    else
      null_nu[i] = g[i] * nu[i] / nu_g;
  }
  return pair_from_ratios({mu.begin(), mu.end()}, std::move(ratios), std::move(null_nu),
                          pair.z_true() * nu_g, pair.name() + "*g");
}

DistributionPair make_random_pair(std::size_t support, double spread, double z,
                                  std::uint64_t seed) {
  if (support == 0) throw std::domain_error("random pair: support must be positive");
  if (!(spread > 0.0)) throw std::domain_error("random pair: spread must be positive");
  CounterRng rng(seed);
  std::vector<double> mu(support), nu(support);
  for (auto* w : {&mu, &nu}) {
    double sum = 0.0;
    for (double& x : *w) {
      x = std::pow(-std::log(rng.uniform_open()), spread);
      sum += x;
    }
    for (double& x : *w) x /= sum;
  }
  std::ostringstream name;
  name << "random(k=" << support << ",spread=" << spread << ",seed=" << seed << ")";
  return make_finite_pair(mu, nu, z, name.str());
}

std::uint32_t atom_for_uniform(const DistributionPair& pair, double u) noexcept {
  const auto cdf = pair.mu_cdf();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::uint32_t>(it - cdf.begin());
}

SampleBatch sample(const DistributionPair& pair, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
  SampleBatch batch;
  batch.seed = seed;
  batch.atoms.resize(n);
  batch.lambdas.resize(n);
  CounterRng rng(seed);
  const auto ratios = pair.ratios();
  const double z = pair.z_true();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t atom = atom_for_uniform(pair, rng.uniform());
    batch.atoms[i] = atom;
    batch.lambdas[i] = z * ratios[atom];
  }
  return batch;
}

std::string to_json(const DistributionPair& pair) {
  nlohmann::ordered_json doc;
  doc["name"] = pair.name();
  doc["mu"] = std::vector<double>(pair.mu_weights().begin(), pair.mu_weights().end());
  doc["nu"] = std::vector<double>(pair.nu_weights().begin(), pair.nu_weights().end());
  doc["z"] = pair.z_true();
  return doc.dump(2);
}

DistributionPair pair_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("pair document: ") + e.what());
  }
  for (const char* key : {"mu", "nu", "z"})
    if (!doc.contains(key)) throw std::invalid_argument(std::string("pair document: missing '") + key + "'");
  for (const auto& [key, _] : doc.items())
    if (key != "mu" && key != "nu" && key != "z" && key != "name")
      throw std::invalid_argument("pair document: unknown key '" + key + "'");
  try {
    const auto mu = doc.at("mu").get<std::vector<double>>();
    const auto nu = doc.at("nu").get<std::vector<double>>();
    const double z = doc.at("z").get<double>();
    const std::string name = doc.value("name", std::string("finite"));
    return make_finite_pair(mu, nu, z, name);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("pair document: ") + e.what());
  }
}

DistributionPair load_pair(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pair file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return pair_from_json(buffer.str());
}

void save_pair(const DistributionPair& pair, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pair file '" + path + "'");
  out << to_json(pair) << '\n';
  if (!out) throw std::runtime_error("failed writing pair file '" + path + "'");
}

}  // namespace pfest
