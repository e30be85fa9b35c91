#include <gtest/gtest.h>

#include "aeromine/brute_force.hpp"
#include "reference.hpp"

using namespace aeromine;

namespace {

const DesignSpace kSpace = DesignSpace::turbine_default();

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace

TEST(GridValues, ContinuousIncludesEndpoints) {
  const auto v = grid_values(kSpace[1], 21);
  ASSERT_EQ(v.size(), 21u);
  EXPECT_EQ(v.front(), 0.05);
  EXPECT_EQ(v.back(), 0.5);
  EXPECT_NEAR(v[1] - v[0], 0.0225, 1e-15);
}

TEST(GridValues, DiscreteEnumeratedOrSubsampled) {
  EXPECT_EQ(grid_values(kSpace[0], 21), (std::vector<double>{2, 3, 4, 5, 6}));
  EXPECT_EQ(grid_values(kSpace[0], 5), (std::vector<double>{2, 3, 4, 5, 6}));
  EXPECT_EQ(grid_values(kSpace[0], 3), (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(grid_values(kSpace[0], 1), (std::vector<double>{2}));
  EXPECT_EQ(grid_values(kSpace[3], 21), (std::vector<double>{0, 1}));
  EXPECT_THROW(grid_values(kSpace[0], 0), std::invalid_argument);
}

TEST(GridSize, CountsSpacingOnlyForArrays) {
  EXPECT_EQ(grid_size(kSpace, 1, {}, 21), 5u * 21 * 21 * 2);
  EXPECT_EQ(grid_size(kSpace, 2, {}, 5), 250u * 250u * 5u);
}

TEST(BruteForce, OneTurbineResolution21MatchesIndependentSearch) {
  double best = -1.0;
  ref::Turbine arg{};
  for (double b : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    for (double c : linspace(0.05, 0.5, 21)) {
      for (double s : linspace(0.0, 1.0, 21)) {
        for (int r : {0, 1}) {
          const double f = ref::array_power({{b, c, s, r}}, 0.75, {1.0});
          if (f > best) {
            best = f;
            arg = {b, c, s, r};
          }
        }
      }
    }
  }
  const auto r = brute_force_optimum(kSpace, 1, {}, {1.0}, {}, 21);
  EXPECT_EQ(r.points, 4410u);
  EXPECT_NEAR(r.fitness, best, 1e-12);
  // chord 0.3 is not a grid point at this resolution; the nearest cell is within 1e-4 of the analytic 1.0.
  EXPECT_NEAR(r.fitness, 1.0, 1e-4);
  ASSERT_EQ(r.configuration.positions(), 1u);
  const auto& g = r.configuration.genomes[0].values;
  EXPECT_EQ(g[0], arg.blades);
  EXPECT_NEAR(g[1], arg.chord, 1e-12);
  EXPECT_NEAR(g[2], 0.6, 1e-12);
  EXPECT_EQ(g[3], 0);
}

TEST(BruteForce, AnalyticOptimumReachedWhenOnGrid) {
  // Resolution 10 gives chord steps of 0.05 and shape steps of 0.1, so 0.6 is a grid shape.
  DesignSpace s({ParameterSpec::integer("blades", 2, 6), ParameterSpec::continuous("chord", 0.05, 0.5),
                 ParameterSpec::continuous("shape", 0.0, 0.9), ParameterSpec::categorical("rotation", {"CW", "CCW"})});
  const auto r = brute_force_optimum(s, 1, {}, {1.0}, {}, 10);
  EXPECT_NEAR(r.fitness, 1.0, 1e-12);
  const auto& g = r.configuration.genomes[0].values;
  EXPECT_NEAR(g[0] * g[1], 1.2, 1e-12);
  EXPECT_NEAR(g[2], 0.6, 1e-12);
}

TEST(BruteForce, SymmetricPairPrefersOppositeRotations) {
  const auto r = brute_force_optimum(kSpace, 2, {}, {1.0}, {}, 5);
  ASSERT_EQ(r.configuration.positions(), 2u);
  EXPECT_NE(r.configuration.genomes[0].values[3], r.configuration.genomes[1].values[3]);
  EXPECT_NEAR(r.configuration.spacing, 0.6875, 1e-12);
}

TEST(BruteForce, ResolutionOneIsLowerCorner) {
  const auto r = brute_force_optimum(kSpace, 1, {}, {1.0}, {}, 1);
  EXPECT_EQ(r.points, 1u);
  EXPECT_EQ(r.configuration.genomes[0], (Genome{{2, 0.05, 0.0, 0}}));
  EXPECT_EQ(r.fitness, 0.0);
}

TEST(BruteForce, TiesGoToLexicographicallySmallest) {
  // Rotation does not matter for one turbine, so CW (index 0) must win.
  const auto r = brute_force_optimum(kSpace, 1, {}, {1.0}, {}, 21);
  EXPECT_EQ(r.configuration.genomes[0].values[3], 0);
}

TEST(BruteForce, GridCap) {
  EXPECT_THROW(brute_force_optimum(kSpace, 3, {}, {1.0}, {}, 21, 1000), GridCapExceeded);
}
