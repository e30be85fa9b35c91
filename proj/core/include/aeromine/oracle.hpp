#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeromine/design_space.hpp"
#include "aeromine/random.hpp"

namespace aeromine {

/// Inter-turbine spacing bounds, in rotor diameters.
struct LayoutBounds {
  double lower = 0.25;
  double upper = 2.0;

  bool operator==(const LayoutBounds&) const = default;
};

/// N position-ordered turbine designs plus the shared rig layout.
struct ArrayConfiguration {
  std::vector<Genome> genomes;
  double spacing = 0.75;
  std::vector<double> wind_speeds{1.0};

  std::size_t positions() const { return genomes.size(); }
  bool operator==(const ArrayConfiguration&) const = default;
};

/// Throws std::invalid_argument on any violated invariant.
void check_configuration(const ArrayConfiguration& config, const DesignSpace& space,
                         const LayoutBounds& layout);

/// Symbols of the synthetic interacting-array fitness function.
struct OracleConstants {
  double sigma_ref = 1.2;
  double s_star = 0.6;
  double kappa = 0.5;
  double beta = 0.4;
  double d_star = 0.75;
  double width = 0.5;
  double p_ref = 1.0;
  double noise_eta = 0.0;
  /// Optional per-position shape optimum; empty means s_star everywhere.
  std::vector<double> position_s_star;

  double shape_optimum(std::size_t position) const;
  bool operator==(const OracleConstants&) const = default;
};

std::vector<Violation> validate_constants(const OracleConstants& constants);

enum class Provenance { synthetic, manual };
std::string to_string(Provenance p);
std::optional<Provenance> parse_provenance(const std::string& text);

/// Power readings indexed by (wind speed, position), in watts.
class Readings {
 public:
  Readings() = default;
  Readings(std::size_t speeds, std::size_t positions, double fill = 0.0)
      : speeds_(speeds), positions_(positions), cells_(speeds * positions, fill) {}
  static Readings from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t speeds() const { return speeds_; }
  std::size_t positions() const { return positions_; }
  bool empty() const { return cells_.empty(); }
  double& at(std::size_t speed, std::size_t position) { return cells_[speed * positions_ + position]; }
  double at(std::size_t speed, std::size_t position) const { return cells_[speed * positions_ + position]; }
  std::span<const double> cells() const { return cells_; }
  std::vector<std::vector<double>> rows() const;

  bool operator==(const Readings&) const = default;

 private:
  std::size_t speeds_ = 0;
  std::size_t positions_ = 0;
  std::vector<double> cells_;
};

/// Mean over wind speeds of the summed power across positions.
double aggregate_fitness(const Readings& readings);

struct Measurement {
  Readings readings;
  double fitness = 0.0;
  Provenance provenance = Provenance::synthetic;
  std::string timestamp;
  /// Client-supplied key of the submission that produced a manual measurement.
  std::string idempotency_key;

  bool operator==(const Measurement&) const = default;
};

std::string utc_timestamp();

/// Field indices of the turbine parameters the synthetic function reads.
struct TurbineFields {
  std::size_t blades;
  std::size_t chord;
  std::size_t shape;
  std::size_t rotation;

  /// Throws std::invalid_argument if the space lacks any of them.
  static TurbineFields resolve(const DesignSpace& space);
};

/// Per-turbine efficiency q = g(solidity) * h(shape).
double turbine_quality(const Genome& genome, const TurbineFields& fields, const OracleConstants& constants,
                       std::size_t position);

/// Noise-free synthetic array: counter-rotating neighbours near the optimal
/// spacing gain power, co-rotating neighbours lose it.
Measurement synthetic_evaluate(const ArrayConfiguration& config, const DesignSpace& space,
                               const OracleConstants& constants, RandomStream* noise = nullptr);

/// Oracle request issued by the engine.
struct EvaluationRequest {
  ArrayConfiguration configuration;
  RandomKey noise_key;
  std::string pending_id;
};

/// Evaluation backend. evaluate_batch invokes `on_result` once per request,
/// serialized, in completion order.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Provenance provenance() const = 0;
  virtual Measurement evaluate(const EvaluationRequest& request) = 0;
  virtual void evaluate_batch(std::span<const EvaluationRequest> requests,
                              const std::function<void(std::size_t, Measurement)>& on_result);
};

class SyntheticOracle final : public Oracle {
 public:
  SyntheticOracle(DesignSpace space, OracleConstants constants)
      : space_(std::move(space)), constants_(std::move(constants)) {}

  Provenance provenance() const override { return Provenance::synthetic; }
  Measurement evaluate(const EvaluationRequest& request) override;

  std::size_t calls() const { return calls_; }

 private:
  DesignSpace space_;
  OracleConstants constants_;
  std::size_t calls_ = 0;
};

}  // namespace aeromine
