#include "aeromine/brute_force.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace aeromine {

GridCapExceeded::GridCapExceeded(std::uint64_t points, std::uint64_t cap)
    : std::runtime_error("grid of " + std::to_string(points) + " points exceeds cap " + std::to_string(cap)),
      points_(points) {}

std::vector<double> grid_values(const ParameterSpec& spec, std::size_t resolution) {
  if (resolution == 0) throw std::invalid_argument("resolution must be at least 1");
  std::vector<double> out;
  if (spec.kind == ParameterKind::continuous) {
    if (resolution == 1) return {spec.lower};
    for (std::size_t i = 0; i < resolution; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(resolution - 1);
      out.push_back(i + 1 == resolution ? spec.upper : spec.lower + t * (spec.upper - spec.lower));
    }
    return out;
  }
  const std::size_t levels = spec.level_count();
  const double first = spec.kind == ParameterKind::integer ? std::ceil(spec.lower) : 0.0;
  if (resolution >= levels) {
    for (std::size_t i = 0; i < levels; ++i) out.push_back(first + static_cast<double>(i));
    return out;
  }
  if (resolution == 1) return {first};
  for (std::size_t i = 0; i < resolution; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(resolution - 1);
    const double idx = std::floor(t * static_cast<double>(levels - 1) + 0.5);
    if (out.empty() || out.back() != first + idx) out.push_back(first + idx);
  }
  return out;
}

namespace {

bool spacing_is_free(std::size_t positions, const LayoutBounds& layout) {
  return positions > 1 && layout.upper > layout.lower;
}

std::vector<double> spacing_values(std::size_t positions, const LayoutBounds& layout, std::size_t resolution) {
  if (!spacing_is_free(positions, layout)) return {layout.lower};
  return grid_values(ParameterSpec::continuous("spacing", layout.lower, layout.upper), resolution);
}

}  // namespace

std::uint64_t grid_size(const DesignSpace& space, std::size_t positions, const LayoutBounds& layout,
                        std::size_t resolution) {
  // Saturating product so huge grids report "over cap" instead of wrapping.
  constexpr std::uint64_t kMax = ~std::uint64_t{0};
  std::uint64_t per_turbine = 1;
  auto mul = [&](std::uint64_t a, std::uint64_t b) { return (b != 0 && a > kMax / b) ? kMax : a * b; };
  for (const auto& spec : space.parameters()) per_turbine = mul(per_turbine, grid_values(spec, resolution).size());
  std::uint64_t total = 1;
  for (std::size_t p = 0; p < positions; ++p) total = mul(total, per_turbine);
  return mul(total, spacing_values(positions, layout, resolution).size());
}

BruteForceResult brute_force_optimum(const DesignSpace& space, std::size_t positions,
                                     const LayoutBounds& layout, const std::vector<double>& wind_speeds,
                                     const OracleConstants& constants, std::size_t resolution,
                                     std::uint64_t cap) {
  if (positions == 0) throw std::invalid_argument("brute_force_optimum: positions must be >= 1");
  const auto fields = TurbineFields::resolve(space);
  const std::uint64_t total = grid_size(space, positions, layout, resolution);
  if (total > cap) throw GridCapExceeded(total, cap);

  // Enumerate per-turbine designs once, in lexicographic order of their
  // coordinates (first parameter slowest).
  std::vector<std::vector<double>> axes;
  for (const auto& spec : space.parameters()) axes.push_back(grid_values(spec, resolution));
  std::vector<Genome> designs;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (bool more = true; more;) {
    Genome g;
    for (std::size_t d = 0; d < axes.size(); ++d) g.values.push_back(axes[d][idx[d]]);
    designs.push_back(std::move(g));
    more = false;
    for (std::size_t d = axes.size(); d-- > 0;) {
      if (++idx[d] < axes[d].size()) { more = true; break; }
      idx[d] = 0;
    }
  }

  const auto spacings = spacing_values(positions, layout, resolution);
  double speed_factor = 0.0;
  for (double v : wind_speeds) speed_factor += constants.p_ref * v * v * v;
  speed_factor /= static_cast<double>(wind_speeds.size());

  // q per (position, design); the shape optimum can depend on position.
  std::vector<std::vector<double>> quality(positions, std::vector<double>(designs.size()));
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t j = 0; j < designs.size(); ++j) quality[p][j] = turbine_quality(designs[j], fields, constants, p);
  }

  std::vector<std::size_t> choice(positions, 0);
  std::vector<std::size_t> best_choice = choice;
  std::size_t best_spacing = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t s = 0; s < spacings.size(); ++s) {
      const double z = (spacings[s] - constants.d_star) / constants.width;
      const double proximity = constants.kappa * std::exp(-z * z);
      double total_q = 0.0;
      for (std::size_t p = 0; p < positions; ++p) total_q += quality[p][choice[p]];
      for (std::size_t p = 0; p + 1 < positions; ++p) {
        const bool counter = designs[choice[p]].values[fields.rotation] != designs[choice[p + 1]].values[fields.rotation];
        total_q += proximity * (counter ? 1.0 : -constants.beta) *
                   std::sqrt(quality[p][choice[p]] * quality[p + 1][choice[p + 1]]);
      }
      const double fitness = speed_factor * total_q;
      if (fitness > best) {
        best = fitness;
        best_choice = choice;
        best_spacing = s;
      }
    }
    std::size_t p = positions;
    bool done = true;
    while (p > 0) {
      --p;
      if (++choice[p] < designs.size()) { done = false; break; }
      choice[p] = 0;
    }
    if (done) break;
  }

  BruteForceResult result;
  for (std::size_t p = 0; p < positions; ++p) result.configuration.genomes.push_back(designs[best_choice[p]]);
  result.configuration.spacing = spacings[best_spacing];
  result.configuration.wind_speeds = wind_speeds;
  result.fitness = synthetic_evaluate(result.configuration, space, constants).fitness;
  result.points = total;
  return result;
}

}  // namespace aeromine
