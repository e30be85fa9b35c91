#include <gtest/gtest.h>

#include <algorithm>

#include "aeromine/config.hpp"

using namespace aeromine;
using nlohmann::json;

namespace {

std::vector<std::string> violations_of(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& lines, const std::string& text) {
  return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) { return l.find(text) != std::string::npos; });
}

}  // namespace

TEST(Config, EmptyDocumentUsesDefaults) {
  const auto c = parse_run_config(json::object());
  EXPECT_EQ(c.positions, 1u);
  EXPECT_EQ(c.space, DesignSpace::turbine_default());
  EXPECT_EQ(c.seeds_per_position, 10u);
  EXPECT_EQ(c.proposals_per_iteration, 1u);
  EXPECT_EQ(c.ea, EAParams{});
  EXPECT_EQ(c.fit, FitHyper{});
  EXPECT_EQ(c.constants, OracleConstants{});
  EXPECT_FALSE(c.spacing_evolves());
}

TEST(Config, SpacingEvolvesOnlyForArraysWithoutFixedSpacing) {
  auto c = parse_run_config(json{{"positions", 2}});
  EXPECT_TRUE(c.spacing_evolves());
  c = parse_run_config(json{{"positions", 2}, {"layout", {{"spacing", 0.75}}}});
  EXPECT_FALSE(c.spacing_evolves());
  EXPECT_DOUBLE_EQ(c.default_spacing(), 0.75);
}

TEST(Config, UnknownKeysReportedTogether) {
  const auto v = violations_of(json{{"positons", 2}, {"ea", {{"pop", 3}}}, {"oracle", {{"constants", {{"kapa", 1}}}}}});
  EXPECT_TRUE(mentions(v, "positons: unknown key"));
  EXPECT_TRUE(mentions(v, "ea.pop: unknown key"));
  EXPECT_TRUE(mentions(v, "oracle.constants.kapa: unknown key"));
}

TEST(Config, InvariantViolationsReported) {
  const auto v = violations_of(json{{"positions", 7},
                                    {"wind_speeds", json::array({1.0, -2.0})},
                                    {"budget", 3},
                                    {"ea", {{"population_size", 1}}},
                                    {"oracle", {{"constants", {{"beta", 1.5}}}}}});
  EXPECT_TRUE(mentions(v, "positions"));
  EXPECT_TRUE(mentions(v, "wind_speeds"));
  EXPECT_TRUE(mentions(v, "budget"));
  EXPECT_TRUE(mentions(v, "ea.population_size"));
  EXPECT_TRUE(mentions(v, "oracle.constants.beta"));
}

TEST(Config, TypeErrorsReported) {
  const auto v = violations_of(json{{"positions", "two"}});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(mentions(v, "positions"));
}

TEST(Config, ParseErrorIsConfigError) {
  EXPECT_THROW(parse_run_config_text("{not json"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/path.json"), ConfigError);
}

TEST(Config, SeedDesignsAndPins) {
  const auto c = parse_run_config(json{
      {"positions", 2},
      {"seeds_per_position", 3},
      {"budget", 20},
      {"seed_designs",
       json::array({{{"name", "commercial"},
                     {"position", 1},
                     {"design", {{"blades", 3}, {"chord", 0.2}, {"shape", 0.5}, {"rotation", "CW"}}}}})},
      {"pins", json::array({{{"position", 2}, {"parameter", "rotation"}, {"value", "CCW"}},
                            {{"parameter", "blades"}, {"value", 4}}})}});
  ASSERT_EQ(c.seed_designs.size(), 1u);
  EXPECT_EQ(c.seed_designs[0].name, "commercial");
  EXPECT_EQ(c.seed_designs[0].position, 0u);
  EXPECT_EQ(c.seed_designs[0].genome, (Genome{{3, 0.2, 0.5, 0}}));
  ASSERT_EQ(c.pins.size(), 2u);
  EXPECT_EQ(c.pins[0].position, std::optional<std::size_t>(1));
  EXPECT_DOUBLE_EQ(c.pins[0].value, 1.0);
  EXPECT_FALSE(c.pins[1].position.has_value());
  EXPECT_DOUBLE_EQ(c.pins[1].value, 4.0);
}

TEST(Config, BadSeedDesignsAndPinsReported) {
  const auto v = violations_of(json{
      {"positions", 1},
      {"seed_designs", json::array({{{"position", 1}, {"design", {{"blades", 9}}}}})},
      {"pins", json::array({{{"parameter", "colour"}, {"value", 1}}})}});
  EXPECT_TRUE(mentions(v, "seed_designs[0].design"));
  EXPECT_TRUE(mentions(v, "pins[0].parameter"));
}

TEST(Config, TooManySeedDesignsForPosition) {
  json designs = json::array();
  for (int i = 0; i < 3; ++i) {
    designs.push_back({{"position", 1}, {"design", {{"blades", 3}, {"chord", 0.2}, {"shape", 0.5}, {"rotation", "CW"}}}});
  }
  const auto v = violations_of(json{{"seeds_per_position", 2}, {"seed_designs", designs}});
  EXPECT_TRUE(mentions(v, "more designs for position 1"));
}

TEST(Config, CustomSpaceWithoutTurbineFieldsRejectedForSyntheticOracle) {
  const json space = json::array({{{"name", "x"}, {"kind", "continuous"}, {"lower", 0.0}, {"upper", 1.0}}});
  EXPECT_FALSE(violations_of(json{{"space", space}}).empty());
  EXPECT_NO_THROW(parse_run_config(json{{"space", space}, {"oracle", {{"kind", "manual"}}}}));
}

TEST(Config, EchoRoundTrips) {
  const auto c = parse_run_config(json{{"positions", 3},
                                       {"seed", 11},
                                       {"budget", 90},
                                       {"wind_speeds", json::array({4.0, 6.0})},
                                       {"oracle", {{"constants", {{"position_s_star", json::array({0.3, 0.6, 0.9})}}}}},
                                       {"pins", json::array({{{"parameter", "rotation"}, {"value", "CCW"}}})}});
  const auto echoed = to_json(c);
  EXPECT_EQ(parse_run_config(echoed), c);
  EXPECT_EQ(to_json(parse_run_config(echoed)), echoed);
}

TEST(Config, SpaceHashStable) {
  const auto a = DesignSpace::turbine_default();
  EXPECT_EQ(space_hash(a), space_hash(DesignSpace::turbine_default()));
  EXPECT_NE(space_hash(a), space_hash(a.with(ParameterSpec::continuous("twist", 0, 1))));
  EXPECT_EQ(space_hash(a).size(), 16u);
}

TEST(Config, GenomeJsonUsesNamesAndLabels) {
  const auto space = DesignSpace::turbine_default();
  const Genome g{{4, 0.3, 0.6, 1}};
  const auto doc = genome_to_json(g, space);
  EXPECT_EQ(doc["rotation"], "CCW");
  EXPECT_EQ(doc["blades"], 4);
  EXPECT_EQ(genome_from_json(doc, space), g);
  EXPECT_THROW(genome_from_json(json{{"blades", 4}}, space), std::exception);
}

TEST(Config, ConfigurationJsonRoundTrips) {
  const auto space = DesignSpace::turbine_default();
  const ArrayConfiguration a{{Genome{{4, 0.3, 0.6, 1}}, Genome{{2, 0.05, 0.0, 0}}}, 1.25, {4.0, 6.0}};
  EXPECT_EQ(configuration_from_json(configuration_to_json(a, space), space), a);
}
