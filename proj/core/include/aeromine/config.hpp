#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aeromine/design_space.hpp"
#include "aeromine/optimizer.hpp"
#include "aeromine/oracle.hpp"
#include "aeromine/surrogate.hpp"

namespace aeromine {

enum class OracleKind { synthetic, manual };
std::string to_string(OracleKind kind);

/// A user-specified starting design for one position (0-based).
struct SeedDesign {
  std::string name;
  std::size_t position = 0;
  Genome genome;

  bool operator==(const SeedDesign&) const = default;
};

/// Holds one parameter fixed at `value` (raw units; level index for
/// categoricals). An unset position pins it everywhere.
struct Pin {
  std::optional<std::size_t> position;
  std::string parameter;
  double value = 0.0;

  bool operator==(const Pin&) const = default;
};

struct RunConfig {
  DesignSpace space = DesignSpace::turbine_default();
  std::size_t positions = 1;
  LayoutBounds layout;
  /// When set, spacing is not evolved.
  std::optional<double> fixed_spacing;
  std::vector<double> wind_speeds{1.0};
  OracleKind oracle = OracleKind::synthetic;
  OracleConstants constants;
  EAParams ea;
  FitHyper fit;
  std::uint64_t seed = 0;
  std::size_t budget = 100;
  std::size_t seeds_per_position = 10;
  std::size_t proposals_per_iteration = 1;
  std::vector<SeedDesign> seed_designs;
  std::vector<Pin> pins;

  /// Spacing is part of every position's candidate vector.
  bool spacing_evolves() const { return positions > 1 && !fixed_spacing && layout.upper > layout.lower; }
  double default_spacing() const { return fixed_spacing.value_or(layout.lower); }

  bool operator==(const RunConfig&) const = default;
};

/// Every violated invariant, as human-readable lines. Empty means valid.
std::vector<std::string> validate_config(const RunConfig& config);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Parses a run configuration document. Unknown keys and invariant
/// violations are all reported together in a ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Full echo with every default spelled out.
nlohmann::json to_json(const RunConfig& config);

nlohmann::json genome_to_json(const Genome& genome, const DesignSpace& space);
Genome genome_from_json(const nlohmann::json& doc, const DesignSpace& space);
nlohmann::json configuration_to_json(const ArrayConfiguration& config, const DesignSpace& space);
ArrayConfiguration configuration_from_json(const nlohmann::json& doc, const DesignSpace& space);

/// Stable 64-bit digest of the design space, hex encoded.
std::string space_hash(const DesignSpace& space);

}  // namespace aeromine
