#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aeromine/oracle.hpp"

namespace aeromine {

class GridCapExceeded : public std::runtime_error {
 public:
  GridCapExceeded(std::uint64_t points, std::uint64_t cap);
  std::uint64_t points() const { return points_; }

 private:
  std::uint64_t points_;
};

struct BruteForceResult {
  ArrayConfiguration configuration;
  double fitness = 0.0;
  std::uint64_t points = 0;
};

/// Values a single parameter takes on the grid, ascending. Continuous
/// parameters get `resolution` evenly spaced points including both ends;
/// integer and categorical parameters are enumerated in full unless the
/// resolution is smaller than their level count, in which case they are
/// subsampled the same way. Resolution 1 is the lower bound only.
std::vector<double> grid_values(const ParameterSpec& spec, std::size_t resolution);

/// Number of grid points brute_force_optimum would visit.
std::uint64_t grid_size(const DesignSpace& space, std::size_t positions, const LayoutBounds& layout,
                        std::size_t resolution);

/// Exhaustive noise-free search of the synthetic function. Ties go to the
/// lexicographically smallest normalized vector (genomes in position order,
/// then spacing). Spacing is a grid dimension only when positions > 1.
BruteForceResult brute_force_optimum(const DesignSpace& space, std::size_t positions,
                                     const LayoutBounds& layout, const std::vector<double>& wind_speeds,
                                     const OracleConstants& constants, std::size_t resolution,
                                     std::uint64_t cap = 10'000'000);

}  // namespace aeromine
