#include "pfest/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pfest/csv.hpp"
#include "pfest/divergences.hpp"

namespace pfest {

namespace {

struct FamilyInfo {
  Family family;
  std::string_view name;
  std::vector<std::string_view> required;
  std::vector<std::string_view> optional;
};

const std::vector<FamilyInfo>& families() {
  static const std::vector<FamilyInfo> table = {
      {Family::BernoulliPair, "bernoulli", {"p", "eps"}, {"z"}},
      {Family::TwoPointMu, "twopoint", {"p"}, {"z"}},
      {Family::PointMass, "pointmass", {"q"}, {"z"}},
      {Family::RandomFinite, "random", {"k"}, {"spread", "seed", "z"}},
      {Family::Identity, "identity", {}, {"k", "z"}},
  };
  return table;
}

const FamilyInfo& info(Family f) {
  for (const auto& i : families())
    if (i.family == f) return i;
  throw std::logic_error("unregistered family");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double x = 0.0;
  try {
    x = parse_double(v);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config: '" + std::string(key) + "' expects a number, got '" +
                                std::string(v) + "'");
  }
  if (!std::isfinite(x))
    throw std::invalid_argument("config: '" + std::string(key) + "' must be finite");
  return x;
}

std::uint64_t to_count(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw std::invalid_argument("config: '" + std::string(key) +
                                "' expects a nonnegative integer, got '" + std::string(v) + "'");
  return x;
}

std::string join_reals(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::SuccessCurve:
      return "success_curve";
    case ExperimentKind::PhaseTransition:
      return "phase_transition";
    case ExperimentKind::SamplingVsCounting:
      return "sampling_vs_counting";
  }
  return "unknown";
}

std::string_view to_string(Family family) noexcept {
  for (const auto& i : families())
    if (i.family == family) return i.name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto k : {ExperimentKind::SuccessCurve, ExperimentKind::PhaseTransition,
                 ExperimentKind::SamplingVsCounting})
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown experiment '" + std::string(text) +
                              "' (expected success_curve, phase_transition or sampling_vs_counting)");
}

Family parse_family(std::string_view text) {
  for (const auto& i : families())
    if (i.name == text) return i.family;
  throw std::invalid_argument("unknown family '" + std::string(text) +
                              "' (expected bernoulli, twopoint, pointmass, random or identity)");
}

void ExperimentConfig::validate() const {
  const auto& fam = info(family);
  for (const auto& [key, _] : family_params) {
    const bool known = std::find(fam.required.begin(), fam.required.end(), key) != fam.required.end() ||
                       std::find(fam.optional.begin(), fam.optional.end(), key) != fam.optional.end();
    if (!known)
      throw std::invalid_argument("config: family " + std::string(fam.name) + " has no parameter '" +
                                  key + "'");
  }
  for (auto key : fam.required)
    if (!family_params.contains(std::string(key)))
      throw std::invalid_argument("config: family " + std::string(fam.name) + " needs param." +
                                  std::string(key));

  if (method != "mom" && method != "quantile" && method != "snis" && method != "is")
    throw std::invalid_argument("config: method must be mom, quantile, snis or is");
  if (plan != "coverage" && plan != "fdiv")
    throw std::invalid_argument("config: plan must be coverage or fdiv");
  for (const auto& name : f_names) parse_generator(name);
  if (eps_grid.empty()) throw std::invalid_argument("config: eps_grid must not be empty");
  for (double e : eps_grid)
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("config: eps_grid values must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0, 1)");
  if (trials < 1) throw std::invalid_argument("config: trials must be at least 1");
  if (probe_trials < 1) throw std::invalid_argument("config: probe_trials must be at least 1");
  if (n_override && *n_override < 1) throw std::invalid_argument("config: n_override must be at least 1");
  if (divergence && !(*divergence >= 0.0))
    throw std::invalid_argument("config: divergence must be nonnegative");
  for (double x : g)
    if (!(x >= 0.0)) throw std::invalid_argument("config: g values must be nonnegative");

  if (experiment == ExperimentKind::PhaseTransition) {
    if (f_names.empty()) throw std::invalid_argument("config: phase_transition needs f");
  }
  if (experiment == ExperimentKind::SuccessCurve) {
    if (plan == "fdiv" && f_names.size() != 1)
      throw std::invalid_argument("config: plan = fdiv needs exactly one f");
    if ((method == "snis" || method == "is") && g.empty())
      throw std::invalid_argument("config: method " + method + " needs g");
  }
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment = " << to_string(c.experiment) << '\n';
  out << "family = " << to_string(c.family) << '\n';
  for (const auto& [key, value] : c.family_params)
    out << "param." << key << " = " << format_double(value) << '\n';
  out << "method = " << c.method << '\n';
  out << "plan = " << c.plan << '\n';
  if (!c.f_names.empty()) {
    out << "f = ";
    for (std::size_t i = 0; i < c.f_names.size(); ++i) out << (i ? ", " : "") << c.f_names[i];
    out << '\n';
  }
  if (c.divergence) out << "divergence = " << format_double(*c.divergence) << '\n';
  out << "eps_grid = " << join_reals(c.eps_grid) << '\n';
  out << "delta = " << format_double(c.delta) << '\n';
  out << "trials = " << c.trials << '\n';
  out << "master_seed = " << c.master_seed << '\n';
  if (!c.output_path.empty()) out << "output = " << c.output_path << '\n';
  if (c.n_override) out << "n_override = " << *c.n_override << '\n';
  out << "probe_trials = " << c.probe_trials << '\n';
  if (!c.g.empty()) out << "g = " << join_reals(c.g) << '\n';
  return out.str();
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" +
                                  std::string(key) + "'");

    if (key == "experiment") {
      c.experiment = parse_experiment_kind(value);
    } else if (key == "family") {
      c.family = parse_family(value);
    } else if (key.starts_with("param.")) {
      const std::string name(key.substr(6));
      if (name.empty()) throw std::invalid_argument("config: empty parameter name");
      c.family_params[name] = to_real(key, value);
    } else if (key == "method") {
      c.method = std::string(value);
    } else if (key == "plan") {
      c.plan = std::string(value);
    } else if (key == "f") {
      c.f_names.clear();
      for (auto name : split_list(value)) c.f_names.emplace_back(name);
    } else if (key == "divergence") {
      c.divergence = to_real(key, value);
    } else if (key == "eps_grid") {
      c.eps_grid.clear();
      for (auto v : split_list(value)) c.eps_grid.push_back(to_real(key, v));
    } else if (key == "delta") {
      c.delta = to_real(key, value);
    } else if (key == "trials") {
      c.trials = to_count(key, value);
    } else if (key == "master_seed") {
      c.master_seed = to_count(key, value);
    } else if (key == "output") {
      c.output_path = std::string(value);
    } else if (key == "n_override") {
      c.n_override = to_count(key, value);
    } else if (key == "probe_trials") {
      c.probe_trials = to_count(key, value);
    } else if (key == "g") {
      c.g.clear();
      for (auto v : split_list(value)) c.g.push_back(to_real(key, v));
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  std::string(key) + "'");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace pfest
