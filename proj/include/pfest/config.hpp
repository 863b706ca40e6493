#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pfest {

enum class ExperimentKind { SuccessCurve, PhaseTransition, SamplingVsCounting };
enum class Family { BernoulliPair, TwoPointMu, PointMass, RandomFinite, Identity };

std::string_view to_string(ExperimentKind kind) noexcept;
std::string_view to_string(Family family) noexcept;
ExperimentKind parse_experiment_kind(std::string_view text);
Family parse_family(std::string_view text);

/// Declarative description of one sweep. The text form is a flat list of
/// `key = value` lines; see docs/config.md for the schema.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SuccessCurve;
  Family family = Family::BernoulliPair;
  std::map<std::string, double> family_params;
  std::string method = "mom";      // mom | quantile | snis | is
  std::string plan = "coverage";   // coverage | fdiv
  std::vector<std::string> f_names;
  std::optional<double> divergence;
  std::vector<double> eps_grid;
  double delta = 0.1;
  std::uint64_t trials = 100;
  std::uint64_t master_seed = 0;
  std::string output_path;
  std::optional<std::uint64_t> n_override;
  std::uint64_t probe_trials = 200;
  std::vector<double> g;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

std::string to_text(const ExperimentConfig& config);
/// Parses and validates. Unknown keys, duplicate keys and malformed values
/// are errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace pfest
