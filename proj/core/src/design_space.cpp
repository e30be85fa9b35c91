#include "aeromine/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aeromine {

std::string to_string(ParameterKind kind) {
  switch (kind) {
    case ParameterKind::continuous: return "continuous";
    case ParameterKind::integer: return "integer";
    case ParameterKind::categorical: return "categorical";
  }
  return "unknown";
}

std::optional<ParameterKind> parse_parameter_kind(const std::string& text) {
  if (text == "continuous") return ParameterKind::continuous;
  if (text == "integer") return ParameterKind::integer;
  if (text == "categorical") return ParameterKind::categorical;
  return std::nullopt;
}

ParameterSpec ParameterSpec::continuous(std::string name, double lower, double upper, std::string units) {
  return {std::move(name), ParameterKind::continuous, lower, upper, {}, std::move(units)};
}

ParameterSpec ParameterSpec::integer(std::string name, double lower, double upper, std::string units) {
  return {std::move(name), ParameterKind::integer, lower, upper, {}, std::move(units)};
}

ParameterSpec ParameterSpec::categorical(std::string name, std::vector<std::string> levels,
                                         std::string units) {
  ParameterSpec spec{std::move(name), ParameterKind::categorical, 0.0, 0.0, std::move(levels),
                     std::move(units)};
  if (!spec.levels.empty()) spec.upper = static_cast<double>(spec.levels.size() - 1);
  return spec;
}

std::size_t ParameterSpec::level_count() const {
  switch (kind) {
    case ParameterKind::categorical: return levels.size();
    case ParameterKind::integer: {
      const double lo = std::ceil(lower);
      const double hi = std::floor(upper);
      return hi >= lo ? static_cast<std::size_t>(hi - lo) + 1 : 0;
    }
    case ParameterKind::continuous: return 0;
  }
  return 0;
}

DesignSpace DesignSpace::turbine_default() {
  return DesignSpace({
      ParameterSpec::integer("blades", 2, 6, "count"),
      ParameterSpec::continuous("chord", 0.05, 0.5, "m"),
      ParameterSpec::continuous("shape", 0.0, 1.0, "dimensionless"),
      ParameterSpec::categorical("rotation", {"CW", "CCW"}, "direction"),
  });
}

std::optional<std::size_t> DesignSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    if (parameters_[i].name == name) return i;
  }
  return std::nullopt;
}

DesignSpace DesignSpace::with(ParameterSpec spec) const {
  auto params = parameters_;
  params.push_back(std::move(spec));
  return DesignSpace(std::move(params));
}

std::vector<Violation> validate_space(const DesignSpace& space) {
  std::vector<Violation> out;
  if (space.empty()) out.push_back({"", "design space has no parameters"});
  std::set<std::string> seen;
  for (const auto& p : space.parameters()) {
    if (p.name.empty()) out.push_back({p.name, "empty name"});
    else if (!seen.insert(p.name).second) out.push_back({p.name, "duplicate name"});
    switch (p.kind) {
      case ParameterKind::continuous:
      case ParameterKind::integer:
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper)) {
          out.push_back({p.name, "non-finite bound"});
        } else if (!(p.lower < p.upper)) {
          out.push_back({p.name, "empty range"});
        } else if (p.kind == ParameterKind::integer && p.level_count() == 0) {
          out.push_back({p.name, "no integer inside range"});
        }
        break;
      case ParameterKind::categorical: {
        std::set<std::string> distinct(p.levels.begin(), p.levels.end());
        if (p.levels.size() < 2) out.push_back({p.name, "fewer than 2 levels"});
        else if (distinct.size() != p.levels.size()) out.push_back({p.name, "duplicate level"});
        break;
      }
    }
  }
  return out;
}

namespace {

std::string describe(const ParameterSpec& spec, double value) {
  std::ostringstream os;
  os << "parameter '" << spec.name << "' value " << value;
  return os.str();
}

// Nearest grid index with ties toward the upper end.
double round_half_up(double x) { return std::floor(x + 0.5); }

}  // namespace

void check_genome(const Genome& genome, const DesignSpace& space) {
  if (genome.values.size() != space.size()) {
    throw std::invalid_argument("genome has " + std::to_string(genome.values.size()) +
                                " values, design space has " + std::to_string(space.size()));
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& spec = space[i];
    const double v = genome.values[i];
    if (!std::isfinite(v)) throw std::invalid_argument(describe(spec, v) + " is not finite");
    switch (spec.kind) {
      case ParameterKind::continuous:
        if (v < spec.lower || v > spec.upper) throw std::invalid_argument(describe(spec, v) + " out of bounds");
        break;
      case ParameterKind::integer:
        if (v < spec.lower || v > spec.upper) throw std::invalid_argument(describe(spec, v) + " out of bounds");
        if (v != std::floor(v)) throw std::invalid_argument(describe(spec, v) + " is not integral");
        break;
      case ParameterKind::categorical:
        if (v < 0 || v >= static_cast<double>(spec.levels.size()) || v != std::floor(v)) {
          throw std::invalid_argument(describe(spec, v) + " is not a level index");
        }
        break;
    }
  }
}

bool is_valid_genome(const Genome& genome, const DesignSpace& space) {
  try {
    check_genome(genome, space);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

UnitVector normalize(const Genome& genome, const DesignSpace& space) {
  check_genome(genome, space);
  UnitVector out;
  out.coords.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& spec = space[i];
    const double v = genome.values[i];
    if (spec.kind == ParameterKind::categorical) {
      out.coords.push_back(v / static_cast<double>(spec.levels.size() - 1));
    } else {
      out.coords.push_back(std::clamp((v - spec.lower) / (spec.upper - spec.lower), 0.0, 1.0));
    }
  }
  return out;
}

Genome denormalize(const UnitVector& vector, const DesignSpace& space) {
  if (vector.size() != space.size()) {
    throw std::invalid_argument("vector has " + std::to_string(vector.size()) +
                                " coordinates, design space has " + std::to_string(space.size()));
  }
  Genome out;
  out.values.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& spec = space[i];
    const double c = vector.coords[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("coordinate " + std::to_string(i) + " (" + spec.name +
                                  ") outside [0,1]");
    }
    switch (spec.kind) {
      case ParameterKind::continuous:
        out.values.push_back(std::clamp(spec.lower + c * (spec.upper - spec.lower), spec.lower, spec.upper));
        break;
      case ParameterKind::integer: {
        const double raw = spec.lower + c * (spec.upper - spec.lower);
        out.values.push_back(std::clamp(round_half_up(raw), std::ceil(spec.lower), std::floor(spec.upper)));
        break;
      }
      case ParameterKind::categorical: {
        const double last = static_cast<double>(spec.levels.size() - 1);
        out.values.push_back(std::clamp(round_half_up(c * last), 0.0, last));
        break;
      }
    }
  }
  return out;
}

UnitVector snap(const UnitVector& vector, const DesignSpace& space) {
  return normalize(denormalize(vector, space), space);
}

Genome random_genome(const DesignSpace& space, RandomStream& stream) {
  Genome out;
  out.values.reserve(space.size());
  for (const auto& spec : space.parameters()) {
    switch (spec.kind) {
      case ParameterKind::continuous:
        out.values.push_back(spec.lower + stream.uniform() * (spec.upper - spec.lower));
        break;
      case ParameterKind::integer:
        out.values.push_back(std::ceil(spec.lower) + static_cast<double>(stream.below(spec.level_count())));
        break;
      case ParameterKind::categorical:
        out.values.push_back(static_cast<double>(stream.below(spec.levels.size())));
        break;
    }
  }
  return out;
}

UnitVector random_unit_vector(const DesignSpace& space, RandomStream& stream) {
  return normalize(random_genome(space, stream), space);
}

std::string format_value(const ParameterSpec& spec, double raw) {
  if (spec.kind == ParameterKind::categorical) {
    const auto idx = static_cast<std::size_t>(raw);
    return idx < spec.levels.size() ? spec.levels[idx] : std::string("?");
  }
  std::ostringstream os;
  if (spec.kind == ParameterKind::integer) os << static_cast<long long>(raw);
  else os << raw;
  return os.str();
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace aeromine
