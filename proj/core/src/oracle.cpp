#include "aeromine/oracle.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

namespace aeromine {

void check_configuration(const ArrayConfiguration& config, const DesignSpace& space,
                         const LayoutBounds& layout) {
  if (config.genomes.empty()) throw std::invalid_argument("array configuration has no turbines");
  for (const auto& g : config.genomes) check_genome(g, space);
  if (!(config.spacing >= layout.lower && config.spacing <= layout.upper)) {
    throw std::invalid_argument("spacing " + std::to_string(config.spacing) + " outside layout bounds");
  }
  if (config.wind_speeds.empty()) throw std::invalid_argument("no wind speeds");
  for (double v : config.wind_speeds) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("wind speeds must be positive");
  }
}

double OracleConstants::shape_optimum(std::size_t position) const {
  return position < position_s_star.size() ? position_s_star[position] : s_star;
}

std::vector<Violation> validate_constants(const OracleConstants& c) {
  std::vector<Violation> out;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back({name, "must be positive"});
  };
  positive("sigma_ref", c.sigma_ref);
  positive("s_star", c.s_star);
  positive("kappa", c.kappa);
  positive("d_star", c.d_star);
  positive("width", c.width);
  positive("p_ref", c.p_ref);
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) out.push_back({"beta", "must lie in [0,1]"});
  if (!(c.noise_eta >= 0.0) || !std::isfinite(c.noise_eta)) out.push_back({"noise_eta", "must be >= 0"});
  for (double s : c.position_s_star) {
    if (!(s > 0.0) || !std::isfinite(s)) out.push_back({"position_s_star", "entries must be positive"});
  }
  return out;
}

std::string to_string(Provenance p) { return p == Provenance::synthetic ? "synthetic" : "manual"; }

std::optional<Provenance> parse_provenance(const std::string& text) {
  if (text == "synthetic") return Provenance::synthetic;
  if (text == "manual") return Provenance::manual;
  return std::nullopt;
}

Readings Readings::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Readings out(rows.size(), rows.front().size());
  for (std::size_t v = 0; v < rows.size(); ++v) {
    if (rows[v].size() != out.positions_) throw std::invalid_argument("ragged readings matrix");
    for (std::size_t i = 0; i < out.positions_; ++i) out.at(v, i) = rows[v][i];
  }
  return out;
}

std::vector<std::vector<double>> Readings::rows() const {
  std::vector<std::vector<double>> out(speeds_);
  for (std::size_t v = 0; v < speeds_; ++v) {
    out[v].assign(cells_.begin() + static_cast<std::ptrdiff_t>(v * positions_),
                  cells_.begin() + static_cast<std::ptrdiff_t>((v + 1) * positions_));
  }
  return out;
}

double aggregate_fitness(const Readings& readings) {
  if (readings.empty()) throw std::invalid_argument("aggregate_fitness: empty readings matrix");
  double sum = 0.0;
  for (std::size_t v = 0; v < readings.speeds(); ++v) {
    double total = 0.0;
    for (std::size_t i = 0; i < readings.positions(); ++i) total += readings.at(v, i);
    sum += total;
  }
  return sum / static_cast<double>(readings.speeds());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

TurbineFields TurbineFields::resolve(const DesignSpace& space) {
  auto need = [&](const char* name) {
    auto idx = space.index_of(name);
    if (!idx) throw std::invalid_argument(std::string("synthetic oracle needs parameter '") + name + "'");
    return *idx;
  };
  return {need("blades"), need("chord"), need("shape"), need("rotation")};
}

double turbine_quality(const Genome& genome, const TurbineFields& f, const OracleConstants& c,
                       std::size_t position) {
  const double solidity = genome.values[f.blades] * genome.values[f.chord] / c.sigma_ref;
  const double g = solidity * std::exp(1.0 - solidity);
  const double ds = genome.values[f.shape] - c.shape_optimum(position);
  const double h = std::max(0.0, 1.0 - 4.0 * ds * ds);
  return g * h;
}

Measurement synthetic_evaluate(const ArrayConfiguration& config, const DesignSpace& space,
                               const OracleConstants& c, RandomStream* noise) {
  const auto fields = TurbineFields::resolve(space);
  const std::size_t n = config.positions();
  if (n == 0) throw std::invalid_argument("synthetic_evaluate: empty array");
  for (const auto& g : config.genomes) check_genome(g, space);

  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = turbine_quality(config.genomes[i], fields, c, i);

  // Interaction share credited to each turbine (half of each incident pair term).
  std::vector<double> share(n, 0.0);
  const double z = (config.spacing - c.d_star) / c.width;
  const double proximity = c.kappa * std::exp(-z * z);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const bool counter = config.genomes[i].values[fields.rotation] != config.genomes[i + 1].values[fields.rotation];
    const double rho = counter ? 1.0 : -c.beta;
    const double term = proximity * rho * std::sqrt(q[i] * q[i + 1]);
    share[i] += 0.5 * term;
    share[i + 1] += 0.5 * term;
  }

  Measurement m;
  m.provenance = Provenance::synthetic;
  m.readings = Readings(config.wind_speeds.size(), n);
  for (std::size_t v = 0; v < config.wind_speeds.size(); ++v) {
    const double speed = config.wind_speeds[v];
    const double scale = c.p_ref * speed * speed * speed;
    for (std::size_t i = 0; i < n; ++i) {
      double reading = scale * (q[i] + share[i]);
      if (noise != nullptr && c.noise_eta > 0.0) reading *= 1.0 + noise->normal(0.0, c.noise_eta);
      m.readings.at(v, i) = reading;
    }
  }
  m.fitness = aggregate_fitness(m.readings);
  m.timestamp = utc_timestamp();
  return m;
}

void Oracle::evaluate_batch(std::span<const EvaluationRequest> requests,
                            const std::function<void(std::size_t, Measurement)>& on_result) {
  for (std::size_t i = 0; i < requests.size(); ++i) on_result(i, evaluate(requests[i]));
}

Measurement SyntheticOracle::evaluate(const EvaluationRequest& request) {
  ++calls_;
  RandomStream noise(request.noise_key);
  return synthetic_evaluate(request.configuration, space_, constants_, &noise);
}

}  // namespace aeromine
