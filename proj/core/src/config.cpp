#include "aeromine/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace aeromine {

using nlohmann::json;

std::string to_string(OracleKind kind) { return kind == OracleKind::synthetic ? "synthetic" : "manual"; }

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += "; ";
    out += l;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations)), violations_(std::move(violations)) {}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> out;
  auto add = [&](const std::string& where, const std::vector<Violation>& vs) {
    for (const auto& v : vs) out.push_back(where + (v.parameter.empty() ? "" : "." + v.parameter) + ": " + v.reason);
  };
  add("space", validate_space(c.space));
  add("oracle.constants", validate_constants(c.constants));
  add("ea", validate_ea_params(c.ea));
  add("fit", validate_fit_hyper(c.fit));
  if (c.positions < 1 || c.positions > 6) out.push_back("positions: must lie in [1,6]");
  if (!(c.layout.lower > 0.0) || !(c.layout.lower <= c.layout.upper)) {
    out.push_back("layout: need 0 < lower <= upper");
  }
  if (c.fixed_spacing && !(*c.fixed_spacing >= c.layout.lower && *c.fixed_spacing <= c.layout.upper)) {
    out.push_back("layout.spacing: outside [lower, upper]");
  }
  if (!c.constants.position_s_star.empty() && c.constants.position_s_star.size() != c.positions) {
    out.push_back("oracle.constants.position_s_star: need one entry per position");
  }
  if (c.wind_speeds.empty()) out.push_back("wind_speeds: must be nonempty");
  for (double v : c.wind_speeds) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      out.push_back("wind_speeds: every speed must be positive");
      break;
    }
  }
  if (c.seeds_per_position < 1) out.push_back("seeds_per_position: must be at least 1");
  if (c.proposals_per_iteration < 1) out.push_back("proposals_per_iteration: must be at least 1");
  if (c.budget < c.positions * c.seeds_per_position) {
    out.push_back("budget: must be at least positions * seeds_per_position");
  }
  if (validate_space(c.space).empty()) {
    if (c.oracle == OracleKind::synthetic) {
      try {
        TurbineFields::resolve(c.space);
      } catch (const std::invalid_argument& e) {
        out.push_back(std::string("space: ") + e.what());
      }
    }
    std::vector<std::size_t> per_position(c.positions, 0);
    for (const auto& s : c.seed_designs) {
      if (s.position >= c.positions) {
        out.push_back("seed_designs." + s.name + ": position out of range");
        continue;
      }
      if (++per_position[s.position] > c.seeds_per_position) {
        out.push_back("seed_designs: more designs for position " + std::to_string(s.position + 1) +
                      " than seeds_per_position");
      }
      if (!is_valid_genome(s.genome, c.space)) out.push_back("seed_designs." + s.name + ": design outside space");
    }
    for (const auto& p : c.pins) {
      auto idx = c.space.index_of(p.parameter);
      if (!idx) {
        out.push_back("pins: unknown parameter '" + p.parameter + "'");
        continue;
      }
      if (p.position && *p.position >= c.positions) out.push_back("pins." + p.parameter + ": position out of range");
      Genome probe;
      for (std::size_t i = 0; i < c.space.size(); ++i) {
        const auto& spec = c.space[i];
        double filler = spec.lower;
        if (spec.kind == ParameterKind::categorical) filler = 0.0;
        if (spec.kind == ParameterKind::integer) filler = std::ceil(spec.lower);
        probe.values.push_back(i == *idx ? p.value : filler);
      }
      if (!is_valid_genome(probe, c.space)) out.push_back("pins." + p.parameter + ": value outside its range");
    }
  }
  return out;
}

namespace {

/// Collects violations while reading a document, rejecting unknown keys.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  bool object(const json& doc, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!doc.is_object()) {
      errors_.push_back(where + ": expected an object");
      return false;
    }
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, _] : doc.items()) {
      if (keys.count(k) == 0) errors_.push_back(where + (where.empty() ? "" : ".") + k + ": unknown key");
    }
    return true;
  }

  template <typename T>
  void get(const json& doc, const char* key, const std::string& where, T& out) {
    if (!doc.contains(key) || doc.at(key).is_null()) return;
    try {
      const auto& v = doc.at(key);
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        out = v.get<double>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
          throw std::invalid_argument("expected a non-negative integer");
        }
        out = v.get<T>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception& e) {
      errors_.push_back(where + (where.empty() ? "" : ".") + key + ": " + e.what());
    }
  }

  void error(std::string message) { errors_.push_back(std::move(message)); }

 private:
  std::vector<std::string>& errors_;
};

ParameterSpec parse_parameter(const json& doc, Reader& r, const std::string& where) {
  ParameterSpec spec;
  if (!r.object(doc, where, {"name", "kind", "lower", "upper", "levels", "units"})) return spec;
  r.get(doc, "name", where, spec.name);
  std::string kind = "continuous";
  r.get(doc, "kind", where, kind);
  if (auto k = parse_parameter_kind(kind)) spec.kind = *k;
  else r.error(where + ".kind: unknown kind '" + kind + "'");
  r.get(doc, "lower", where, spec.lower);
  r.get(doc, "upper", where, spec.upper);
  r.get(doc, "levels", where, spec.levels);
  r.get(doc, "units", where, spec.units);
  if (spec.kind == ParameterKind::categorical) {
    spec.lower = 0.0;
    spec.upper = spec.levels.empty() ? 0.0 : static_cast<double>(spec.levels.size() - 1);
  } else if (!spec.levels.empty()) {
    r.error(where + ".levels: only categorical parameters have levels");
  }
  return spec;
}

double parse_raw_value(const json& v, const ParameterSpec& spec) {
  if (spec.kind == ParameterKind::categorical) {
    if (!v.is_string()) throw std::invalid_argument("expected a level label for '" + spec.name + "'");
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
      if (spec.levels[i] == v.get<std::string>()) return static_cast<double>(i);
    }
    throw std::invalid_argument("unknown level '" + v.get<std::string>() + "' for '" + spec.name + "'");
  }
  if (!v.is_number()) throw std::invalid_argument("expected a number for '" + spec.name + "'");
  return v.get<double>();
}

json raw_value_to_json(const ParameterSpec& spec, double raw) {
  switch (spec.kind) {
    case ParameterKind::categorical: return format_value(spec, raw);
    case ParameterKind::integer: return static_cast<long long>(raw);
    case ParameterKind::continuous: return raw;
  }
  return raw;
}

}  // namespace

json genome_to_json(const Genome& genome, const DesignSpace& space) {
  json out = json::object();
  for (std::size_t i = 0; i < space.size(); ++i) out[space[i].name] = raw_value_to_json(space[i], genome.values.at(i));
  return out;
}

Genome genome_from_json(const json& doc, const DesignSpace& space) {
  if (!doc.is_object()) throw std::invalid_argument("design must be an object");
  for (const auto& [k, _] : doc.items()) {
    if (!space.index_of(k)) throw std::invalid_argument("unknown parameter '" + k + "'");
  }
  Genome g;
  for (const auto& spec : space.parameters()) {
    if (!doc.contains(spec.name)) throw std::invalid_argument("missing parameter '" + spec.name + "'");
    g.values.push_back(parse_raw_value(doc.at(spec.name), spec));
  }
  return g;
}

json configuration_to_json(const ArrayConfiguration& config, const DesignSpace& space) {
  json genomes = json::array();
  for (const auto& g : config.genomes) genomes.push_back(genome_to_json(g, space));
  return {{"genomes", genomes}, {"spacing", config.spacing}, {"wind_speeds", config.wind_speeds}};
}

ArrayConfiguration configuration_from_json(const json& doc, const DesignSpace& space) {
  ArrayConfiguration c;
  c.genomes.clear();
  for (const auto& g : doc.at("genomes")) c.genomes.push_back(genome_from_json(g, space));
  c.spacing = doc.at("spacing").get<double>();
  c.wind_speeds = doc.at("wind_speeds").get<std::vector<double>>();
  return c;
}

RunConfig parse_run_config(const json& doc) {
  std::vector<std::string> errors;
  Reader r(errors);
  RunConfig c;
  if (!r.object(doc, "", {"space", "positions", "layout", "wind_speeds", "oracle", "ea", "fit", "seed", "budget",
                          "seeds_per_position", "proposals_per_iteration", "seed_designs", "pins"})) {
    throw ConfigError(errors);
  }
  if (doc.contains("space")) {
    if (!doc["space"].is_array()) {
      r.error("space: expected a list of parameters");
    } else {
      std::vector<ParameterSpec> params;
      for (std::size_t i = 0; i < doc["space"].size(); ++i) {
        params.push_back(parse_parameter(doc["space"][i], r, "space[" + std::to_string(i) + "]"));
      }
      c.space = DesignSpace(std::move(params));
    }
  }
  r.get(doc, "positions", "", c.positions);
  if (doc.contains("layout") && r.object(doc["layout"], "layout", {"lower", "upper", "spacing"})) {
    r.get(doc["layout"], "lower", "layout", c.layout.lower);
    r.get(doc["layout"], "upper", "layout", c.layout.upper);
    if (doc["layout"].contains("spacing") && !doc["layout"]["spacing"].is_null()) {
      double s = 0.0;
      r.get(doc["layout"], "spacing", "layout", s);
      c.fixed_spacing = s;
    }
  }
  r.get(doc, "wind_speeds", "", c.wind_speeds);
  if (doc.contains("oracle") && r.object(doc["oracle"], "oracle", {"kind", "constants"})) {
    const auto& o = doc["oracle"];
    std::string kind = "synthetic";
    r.get(o, "kind", "oracle", kind);
    if (kind == "synthetic") c.oracle = OracleKind::synthetic;
    else if (kind == "manual") c.oracle = OracleKind::manual;
    else r.error("oracle.kind: expected synthetic or manual");
    if (o.contains("constants") &&
        r.object(o["constants"], "oracle.constants",
                 {"sigma_ref", "s_star", "kappa", "beta", "d_star", "width", "p_ref", "noise_eta", "position_s_star"})) {
      const auto& k = o["constants"];
      const std::string w = "oracle.constants";
      r.get(k, "sigma_ref", w, c.constants.sigma_ref);
      r.get(k, "s_star", w, c.constants.s_star);
      r.get(k, "kappa", w, c.constants.kappa);
      r.get(k, "beta", w, c.constants.beta);
      r.get(k, "d_star", w, c.constants.d_star);
      r.get(k, "width", w, c.constants.width);
      r.get(k, "p_ref", w, c.constants.p_ref);
      r.get(k, "noise_eta", w, c.constants.noise_eta);
      r.get(k, "position_s_star", w, c.constants.position_s_star);
    }
  }
  if (doc.contains("ea") && r.object(doc["ea"], "ea",
                                     {"population_size", "tournament_k", "crossover_prob", "mutation_sigma",
                                      "mutation_prob", "generations_on_model", "novelty_eps", "immigrant_fraction"})) {
    const auto& e = doc["ea"];
    r.get(e, "population_size", "ea", c.ea.population_size);
    r.get(e, "tournament_k", "ea", c.ea.tournament_k);
    r.get(e, "crossover_prob", "ea", c.ea.crossover_prob);
    r.get(e, "mutation_sigma", "ea", c.ea.mutation_sigma);
    if (e.contains("mutation_prob") && !e["mutation_prob"].is_null()) {
      double p = 0.0;
      r.get(e, "mutation_prob", "ea", p);
      c.ea.mutation_prob = p;
    }
    r.get(e, "generations_on_model", "ea", c.ea.generations_on_model);
    r.get(e, "novelty_eps", "ea", c.ea.novelty_eps);
    r.get(e, "immigrant_fraction", "ea", c.ea.immigrant_fraction);
  }
  if (doc.contains("fit") &&
      r.object(doc["fit"], "fit", {"hidden_units", "learning_rate", "epochs", "early_stop_patience", "init_range"})) {
    const auto& f = doc["fit"];
    r.get(f, "hidden_units", "fit", c.fit.hidden_units);
    r.get(f, "learning_rate", "fit", c.fit.learning_rate);
    r.get(f, "epochs", "fit", c.fit.epochs);
    r.get(f, "early_stop_patience", "fit", c.fit.early_stop_patience);
    r.get(f, "init_range", "fit", c.fit.init_range);
  }
  r.get(doc, "seed", "", c.seed);
  r.get(doc, "budget", "", c.budget);
  r.get(doc, "seeds_per_position", "", c.seeds_per_position);
  r.get(doc, "proposals_per_iteration", "", c.proposals_per_iteration);

  const bool space_ok = validate_space(c.space).empty();
  if (doc.contains("seed_designs")) {
    if (!doc["seed_designs"].is_array()) r.error("seed_designs: expected a list");
    for (std::size_t i = 0; doc["seed_designs"].is_array() && i < doc["seed_designs"].size(); ++i) {
      const auto& s = doc["seed_designs"][i];
      const std::string w = "seed_designs[" + std::to_string(i) + "]";
      if (!r.object(s, w, {"name", "position", "design"})) continue;
      SeedDesign seed;
      seed.name = "seed" + std::to_string(i + 1);
      r.get(s, "name", w, seed.name);
      std::size_t position = 1;
      r.get(s, "position", w, position);
      if (position < 1) r.error(w + ".position: positions are numbered from 1");
      seed.position = position == 0 ? 0 : position - 1;
      if (!s.contains("design")) {
        r.error(w + ".design: missing");
        continue;
      }
      if (!space_ok) continue;
      try {
        seed.genome = genome_from_json(s["design"], c.space);
      } catch (const std::exception& e) {
        r.error(w + ".design: " + e.what());
        continue;
      }
      c.seed_designs.push_back(std::move(seed));
    }
  }
  if (doc.contains("pins")) {
    if (!doc["pins"].is_array()) r.error("pins: expected a list");
    for (std::size_t i = 0; doc["pins"].is_array() && i < doc["pins"].size(); ++i) {
      const auto& p = doc["pins"][i];
      const std::string w = "pins[" + std::to_string(i) + "]";
      if (!r.object(p, w, {"position", "parameter", "value"})) continue;
      Pin pin;
      r.get(p, "parameter", w, pin.parameter);
      if (p.contains("position") && !p["position"].is_null()) {
        std::size_t position = 0;
        r.get(p, "position", w, position);
        if (position < 1) r.error(w + ".position: positions are numbered from 1");
        else pin.position = position - 1;
      }
      auto idx = space_ok ? c.space.index_of(pin.parameter) : std::nullopt;
      if (!idx) {
        r.error(w + ".parameter: unknown parameter '" + pin.parameter + "'");
        continue;
      }
      try {
        pin.value = parse_raw_value(p.at("value"), c.space[*idx]);
      } catch (const std::exception& e) {
        r.error(w + ".value: " + e.what());
        continue;
      }
      c.pins.push_back(std::move(pin));
    }
  }

  for (auto& v : validate_config(c)) errors.push_back(std::move(v));
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

RunConfig parse_run_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  return parse_run_config(doc);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

json to_json(const RunConfig& c) {
  json space = json::array();
  for (const auto& p : c.space.parameters()) {
    json spec = {{"name", p.name}, {"kind", to_string(p.kind)}, {"units", p.units}};
    if (p.kind == ParameterKind::categorical) spec["levels"] = p.levels;
    else {
      spec["lower"] = p.lower;
      spec["upper"] = p.upper;
    }
    space.push_back(std::move(spec));
  }
  json seeds = json::array();
  for (const auto& s : c.seed_designs) {
    seeds.push_back({{"name", s.name}, {"position", s.position + 1}, {"design", genome_to_json(s.genome, c.space)}});
  }
  json pins = json::array();
  for (const auto& p : c.pins) {
    json pin = {{"parameter", p.parameter}, {"position", nullptr}};
    if (p.position) pin["position"] = *p.position + 1;
    if (auto idx = c.space.index_of(p.parameter)) pin["value"] = raw_value_to_json(c.space[*idx], p.value);
    pins.push_back(std::move(pin));
  }
  return {
      {"space", space},
      {"positions", c.positions},
      {"layout",
       {{"lower", c.layout.lower},
        {"upper", c.layout.upper},
        {"spacing", c.fixed_spacing ? json(*c.fixed_spacing) : json(nullptr)}}},
      {"wind_speeds", c.wind_speeds},
      {"oracle",
       {{"kind", to_string(c.oracle)},
        {"constants",
         {{"sigma_ref", c.constants.sigma_ref},
          {"s_star", c.constants.s_star},
          {"kappa", c.constants.kappa},
          {"beta", c.constants.beta},
          {"d_star", c.constants.d_star},
          {"width", c.constants.width},
          {"p_ref", c.constants.p_ref},
          {"noise_eta", c.constants.noise_eta},
          {"position_s_star", c.constants.position_s_star}}}}},
      {"ea",
       {{"population_size", c.ea.population_size},
        {"tournament_k", c.ea.tournament_k},
        {"crossover_prob", c.ea.crossover_prob},
        {"mutation_sigma", c.ea.mutation_sigma},
        {"mutation_prob", c.ea.mutation_prob ? json(*c.ea.mutation_prob) : json(nullptr)},
        {"generations_on_model", c.ea.generations_on_model},
        {"novelty_eps", c.ea.novelty_eps},
        {"immigrant_fraction", c.ea.immigrant_fraction}}},
      {"fit",
       {{"hidden_units", c.fit.hidden_units},
        {"learning_rate", c.fit.learning_rate},
        {"epochs", c.fit.epochs},
        {"early_stop_patience", c.fit.early_stop_patience},
        {"init_range", c.fit.init_range}}},
      {"seed", c.seed},
      {"budget", c.budget},
      {"seeds_per_position", c.seeds_per_position},
      {"proposals_per_iteration", c.proposals_per_iteration},
      {"seed_designs", seeds},
      {"pins", pins},
  };
}

std::string space_hash(const DesignSpace& space) {
  RunConfig probe;
  probe.space = space;
  const std::string text = to_json(probe)["space"].dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace aeromine
