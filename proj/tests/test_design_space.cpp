#include <gtest/gtest.h>

#include <cmath>

#include "aeromine/design_space.hpp"
#include "aeromine/random.hpp"

using namespace aeromine;

namespace {

bool has_violation(const std::vector<Violation>& vs, const std::string& reason) {
  for (const auto& v : vs) {
    if (v.reason == reason) return true;
  }
  return false;
}

const DesignSpace kSpace = DesignSpace::turbine_default();

}  // namespace

TEST(DesignSpace, DefaultTurbineSpace) {
  ASSERT_EQ(kSpace.size(), 4u);
  EXPECT_EQ(kSpace[0].name, "blades");
  EXPECT_EQ(kSpace[0].kind, ParameterKind::integer);
  EXPECT_EQ(kSpace[1].name, "chord");
  EXPECT_DOUBLE_EQ(kSpace[1].lower, 0.05);
  EXPECT_DOUBLE_EQ(kSpace[1].upper, 0.5);
  EXPECT_EQ(kSpace[3].levels, (std::vector<std::string>{"CW", "CCW"}));
  EXPECT_EQ(kSpace.index_of("shape"), 2u);
  EXPECT_FALSE(kSpace.index_of("nope"));
  EXPECT_TRUE(validate_space(kSpace).empty());
}

TEST(ValidateSpace, WellFormedPair) {
  DesignSpace s({ParameterSpec::integer("blades", 2, 6), ParameterSpec::continuous("chord", 0.05, 0.5)});
  EXPECT_TRUE(validate_space(s).empty());
}

TEST(ValidateSpace, DuplicateName) {
  DesignSpace s({ParameterSpec::continuous("chord", 0, 1), ParameterSpec::continuous("chord", 0, 2)});
  const auto vs = validate_space(s);
  ASSERT_TRUE(has_violation(vs, "duplicate name"));
  EXPECT_EQ(vs[0].parameter, "chord");
}

TEST(ValidateSpace, EmptyRange) {
  DesignSpace s({ParameterSpec::continuous("chord", 0.3, 0.3)});
  EXPECT_TRUE(has_violation(validate_space(s), "empty range"));
}

TEST(ValidateSpace, ReportsEveryViolation) {
  DesignSpace s({ParameterSpec::continuous("a", 1, 0), ParameterSpec::categorical("b", {"x"}),
                 ParameterSpec::categorical("c", {"x", "x"}), ParameterSpec::integer("d", 0.2, 0.8),
                 ParameterSpec::continuous("", 0, 1)});
  const auto vs = validate_space(s);
  EXPECT_TRUE(has_violation(vs, "empty range"));
  EXPECT_TRUE(has_violation(vs, "fewer than 2 levels"));
  EXPECT_TRUE(has_violation(vs, "duplicate level"));
  EXPECT_TRUE(has_violation(vs, "no integer inside range"));
  EXPECT_TRUE(has_violation(vs, "empty name"));
}

TEST(ValidateSpace, NonFiniteBound) {
  DesignSpace s({ParameterSpec::continuous("a", 0, INFINITY)});
  EXPECT_TRUE(has_violation(validate_space(s), "non-finite bound"));
}

TEST(Normalize, SpecExamples) {
  const auto v = normalize(Genome{{2, 0.275, 0.0, 1}}, kSpace);
  EXPECT_DOUBLE_EQ(v.coords[0], 0.0);
  EXPECT_DOUBLE_EQ(v.coords[1], 0.5);
  EXPECT_DOUBLE_EQ(v.coords[3], 1.0);
}

TEST(Normalize, RejectsBadGenomes) {
  EXPECT_THROW(normalize(Genome{{2, 0.2, 0.5}}, kSpace), std::invalid_argument);
  EXPECT_THROW(normalize(Genome{{7, 0.2, 0.5, 0}}, kSpace), std::invalid_argument);
  EXPECT_THROW(normalize(Genome{{3.5, 0.2, 0.5, 0}}, kSpace), std::invalid_argument);
  EXPECT_THROW(normalize(Genome{{3, 0.2, 0.5, 2}}, kSpace), std::invalid_argument);
  EXPECT_THROW(normalize(Genome{{3, NAN, 0.5, 0}}, kSpace), std::invalid_argument);
}

TEST(Denormalize, SpecExamples) {
  EXPECT_EQ(denormalize(UnitVector{{0.0, 0.0, 0.0, 0.0}}, kSpace).values[0], 2);
  EXPECT_EQ(denormalize(UnitVector{{0.49, 0.0, 0.0, 0.0}}, kSpace).values[0], 4);
  const auto g = denormalize(UnitVector{{0.0, 0.0, 0.0, 1.0}}, kSpace);
  EXPECT_EQ(format_value(kSpace[3], g.values[3]), "CCW");
}

TEST(Denormalize, TiesRoundTowardUpper) {
  // 0.125 * 4 = 0.5 above the lower bound: exactly between 2 and 3.
  EXPECT_EQ(denormalize(UnitVector{{0.125, 0, 0, 0.5}}, kSpace).values[0], 3);
  EXPECT_EQ(denormalize(UnitVector{{0.125, 0, 0, 0.5}}, kSpace).values[3], 1);
}

TEST(Denormalize, RejectsOutOfRange) {
  EXPECT_THROW(denormalize(UnitVector{{1.1, 0, 0, 0}}, kSpace), std::invalid_argument);
  EXPECT_THROW(denormalize(UnitVector{{0.5, -0.01, 0, 0}}, kSpace), std::invalid_argument);
  EXPECT_THROW(denormalize(UnitVector{{0.5, 0.5}}, kSpace), std::invalid_argument);
}

TEST(RoundTrip, GenomeExactAndVectorUpToSnap) {
  RandomStream s({11, 0, 0, "roundtrip"});
  for (int i = 0; i < 2000; ++i) {
    const Genome g = random_genome(kSpace, s);
    const Genome back = denormalize(normalize(g, kSpace), kSpace);
    EXPECT_EQ(back.values[0], g.values[0]);
    EXPECT_EQ(back.values[3], g.values[3]);
    EXPECT_NEAR(back.values[1], g.values[1], 1e-12 * std::abs(g.values[1]));
    EXPECT_NEAR(back.values[2], g.values[2], 1e-12);

    const UnitVector v = random_unit_vector(kSpace, s);
    const UnitVector w = normalize(denormalize(v, kSpace), kSpace);
    EXPECT_EQ(w, snap(v, kSpace));
    EXPECT_NEAR(w.coords[1], v.coords[1], 1e-12);
  }
}

TEST(RandomGenome, Deterministic) {
  RandomStream a({5, 0, 0, "g"});
  RandomStream b({5, 0, 0, "g"});
  EXPECT_EQ(random_genome(kSpace, a), random_genome(kSpace, b));
}

TEST(RandomGenome, BladeLevelsUniform) {
  RandomStream s({6, 0, 0, "blades"});
  std::vector<int> counts(7, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Genome g = random_genome(kSpace, s);
    ASSERT_TRUE(is_valid_genome(g, kSpace));
    ++counts[static_cast<int>(g.values[0])];
  }
  const double sd = std::sqrt(n * 0.2 * 0.8);
  for (int b = 2; b <= 6; ++b) EXPECT_NEAR(counts[b], 2000.0, 3 * sd) << "blades " << b;
}

TEST(RandomGenome, SingleCategoricalClosure) {
  DesignSpace s({ParameterSpec::categorical("rotation", {"CW", "CCW"})});
  RandomStream r({7, 0, 0, "rot"});
  for (int i = 0; i < 100; ++i) {
    const auto label = format_value(s[0], random_genome(s, r).values[0]);
    EXPECT_TRUE(label == "CW" || label == "CCW");
  }
}

TEST(Snap, KeepsContinuousMovesDiscrete) {
  const auto v = snap(UnitVector{{0.3, 0.123, 0.77, 0.4}}, kSpace);
  EXPECT_DOUBLE_EQ(v.coords[0], 0.25);
  EXPECT_NEAR(v.coords[1], 0.123, 1e-15);
  EXPECT_DOUBLE_EQ(v.coords[3], 0.0);
}

TEST(FormatValue, Kinds) {
  EXPECT_EQ(format_value(kSpace[0], 4), "4");
  EXPECT_EQ(format_value(kSpace[3], 0), "CW");
  EXPECT_EQ(format_value(kSpace[1], 0.3), "0.3");
}

TEST(DesignSpace, WithAppends) {
  const auto s = kSpace.with(ParameterSpec::continuous("spacing", 0.25, 2.0));
  EXPECT_EQ(s.size(), 5u);
  EXPECT_EQ(kSpace.size(), 4u);
  EXPECT_EQ(s.index_of("spacing"), 4u);
}

TEST(Distance, Euclidean) {
  const std::vector<double> a{0, 0};
  const std::vector<double> b{3, 4};
  EXPECT_DOUBLE_EQ(euclidean_distance(a, b), 5.0);
}
