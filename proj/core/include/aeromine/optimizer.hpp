#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "aeromine/design_space.hpp"
#include "aeromine/random.hpp"
#include "aeromine/surrogate.hpp"

namespace aeromine {

struct EAParams {
  std::size_t population_size = 20;
  std::size_t tournament_k = 3;
  double crossover_prob = 0.8;
  double mutation_sigma = 0.1;
  /// Per-coordinate mutation probability; unset means 1 / dimension.
  std::optional<double> mutation_prob;
  std::size_t generations_on_model = 50;
  double novelty_eps = 1e-3;
  double immigrant_fraction = 0.2;

  double mutation_rate(std::size_t dimension) const;
  bool operator==(const EAParams&) const = default;
};

std::vector<Violation> validate_ea_params(const EAParams& params);

struct Candidate {
  UnitVector vector;
  std::optional<double> predicted;
  std::optional<double> measured;
};

enum class KeyKind { predicted, measured };

class MissingKeyError : public std::invalid_argument {
 public:
  MissingKeyError() : std::invalid_argument("candidate has no key for selection") {}
};

double key_of(const Candidate& c, KeyKind kind);

/// Gaussian perturbation clamped to [0,1]; categorical coordinates resample a
/// level instead.
UnitVector mutate(const UnitVector& v, const EAParams& params, const DesignSpace& space, RandomStream& stream);

/// Uniform crossover with probability crossover_prob, otherwise a copy of `a`.
UnitVector crossover(const UnitVector& a, const UnitVector& b, const EAParams& params, RandomStream& stream);

/// k draws with replacement; the best key wins, ties go to the lowest index.
std::size_t tournament_select(std::span<const Candidate> pop, std::size_t k, KeyKind kind, RandomStream& stream);

/// Produces `count` children by tournament, crossover and mutation.
std::vector<UnitVector> breed(std::span<const Candidate> pop, std::size_t count, KeyKind kind, const EAParams& params,
                              const DesignSpace& space, RandomStream& stream);

/// Stable sort by key, best first.
std::vector<Candidate> rank(std::vector<Candidate> pop, KeyKind kind);

/// Next population: the current best followed by the keyed offspring, ranked.
std::vector<Candidate> merge_generation(std::span<const Candidate> pop, std::vector<UnitVector> offspring,
                                        const std::vector<double>& keys, KeyKind kind);

/// Evaluates a batch of vectors; returns one key per vector.
using BatchKey = std::function<std::vector<double>(std::span<const UnitVector>)>;

/// Generational EA with elitism of one. Every member of `pop` must carry the
/// key. Each generation breeds `offspring` children (population_size - 1 by
/// default). Returns the final population ranked best first.
std::vector<Candidate> evolve(std::vector<Candidate> pop, std::size_t generations, KeyKind kind, const BatchKey& key,
                              const EAParams& params, const DesignSpace& space, RandomStream& stream,
                              std::optional<std::size_t> offspring = std::nullopt);

/// Maps a position's candidate vector to the surrogate's input vector.
using Composer = std::function<UnitVector(const UnitVector&)>;

/// Model inversion: evolves on predict(model, context(v)) for
/// generations_on_model generations. The initial population is the leading
/// members of `current` plus random immigrants. Never touches an oracle.
std::vector<Candidate> evolve_on_model(const SurrogateModel& model, const Composer& context,
                                       std::span<const UnitVector> current, const EAParams& params,
                                       const DesignSpace& space, RandomStream& stream);

/// True when `candidate` is at least `eps` away from every archived vector.
bool novelty_filter(const UnitVector& candidate, std::span<const UnitVector> archive, double eps);

}  // namespace aeromine
