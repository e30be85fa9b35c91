#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeromine/random.hpp"

namespace aeromine {

enum class ParameterKind { continuous, integer, categorical };

std::string to_string(ParameterKind kind);
std::optional<ParameterKind> parse_parameter_kind(const std::string& text);

struct ParameterSpec {
  std::string name;
  ParameterKind kind = ParameterKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string> levels;
  std::string units;

  static ParameterSpec continuous(std::string name, double lower, double upper, std::string units = {});
  static ParameterSpec integer(std::string name, double lower, double upper, std::string units = {});
  static ParameterSpec categorical(std::string name, std::vector<std::string> levels,
                                   std::string units = {});

  /// Number of distinct raw values for integer/categorical kinds.
  std::size_t level_count() const;

  bool operator==(const ParameterSpec&) const = default;
};

struct Violation {
  std::string parameter;
  std::string reason;

  bool operator==(const Violation&) const = default;
};

/// Ordered, named design parameters for one turbine.
class DesignSpace {
 public:
  DesignSpace() = default;
  explicit DesignSpace(std::vector<ParameterSpec> parameters) : parameters_(std::move(parameters)) {}

  /// blades int [2,6], chord [0.05,0.5] m, shape [0,1], rotation {CW,CCW}.
  static DesignSpace turbine_default();

  std::size_t size() const { return parameters_.size(); }
  bool empty() const { return parameters_.empty(); }
  const ParameterSpec& operator[](std::size_t i) const { return parameters_[i]; }
  const std::vector<ParameterSpec>& parameters() const { return parameters_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  /// Returns a copy with `spec` appended.
  DesignSpace with(ParameterSpec spec) const;

  bool operator==(const DesignSpace&) const = default;

 private:
  std::vector<ParameterSpec> parameters_;
};

/// Empty result means the space is well formed.
std::vector<Violation> validate_space(const DesignSpace& space);

/// Raw parameter values. Categorical parameters hold their level index.
struct Genome {
  std::vector<double> values;

  bool operator==(const Genome&) const = default;
};

/// Coordinates in [0,1], one per parameter.
struct UnitVector {
  std::vector<double> coords;

  std::size_t size() const { return coords.size(); }
  bool operator==(const UnitVector&) const = default;
};

/// Throws std::invalid_argument if `genome` is not a valid point of `space`.
void check_genome(const Genome& genome, const DesignSpace& space);
bool is_valid_genome(const Genome& genome, const DesignSpace& space);

UnitVector normalize(const Genome& genome, const DesignSpace& space);
Genome denormalize(const UnitVector& vector, const DesignSpace& space);

/// normalize(denormalize(v)): moves integer and categorical coordinates onto
/// their grid.
UnitVector snap(const UnitVector& vector, const DesignSpace& space);

Genome random_genome(const DesignSpace& space, RandomStream& stream);
UnitVector random_unit_vector(const DesignSpace& space, RandomStream& stream);

/// Raw value rendered for display or serialization (labels for categoricals).
std::string format_value(const ParameterSpec& spec, double raw);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace aeromine
