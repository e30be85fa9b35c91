#include "aeromine/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace aeromine {

double EAParams::mutation_rate(std::size_t dimension) const {
  if (mutation_prob) return *mutation_prob;
  return dimension == 0 ? 0.0 : 1.0 / static_cast<double>(dimension);
}

std::vector<Violation> validate_ea_params(const EAParams& p) {
  std::vector<Violation> out;
  auto prob = [&](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back({name, "must lie in [0,1]"});
  };
  if (p.population_size < 2) out.push_back({"population_size", "must be at least 2"});
  if (p.tournament_k < 1 || p.tournament_k > p.population_size) {
    out.push_back({"tournament_k", "must lie in [1, population_size]"});
  }
  prob("crossover_prob", p.crossover_prob);
  if (p.mutation_prob) prob("mutation_prob", *p.mutation_prob);
  prob("immigrant_fraction", p.immigrant_fraction);
  if (!(p.mutation_sigma >= 0.0) || !std::isfinite(p.mutation_sigma)) out.push_back({"mutation_sigma", "must be >= 0"});
  if (!(p.novelty_eps >= 0.0) || !std::isfinite(p.novelty_eps)) out.push_back({"novelty_eps", "must be >= 0"});
  return out;
}

double key_of(const Candidate& c, KeyKind kind) {
  const auto& k = kind == KeyKind::predicted ? c.predicted : c.measured;
  if (!k) throw MissingKeyError();
  return *k;
}

UnitVector mutate(const UnitVector& v, const EAParams& params, const DesignSpace& space, RandomStream& stream) {
  UnitVector out = v;
  const double rate = params.mutation_rate(v.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!stream.bernoulli(rate)) continue;
    if (i < space.size() && space[i].kind == ParameterKind::categorical) {
      const auto levels = space[i].levels.size();
      out.coords[i] = static_cast<double>(stream.below(levels)) / static_cast<double>(levels - 1);
    } else {
      out.coords[i] = std::clamp(out.coords[i] + stream.normal(0.0, params.mutation_sigma), 0.0, 1.0);
    }
  }
  return out;
}

UnitVector crossover(const UnitVector& a, const UnitVector& b, const EAParams& params, RandomStream& stream) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover: dimension mismatch");
  if (!stream.bernoulli(params.crossover_prob)) return a;
  UnitVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (stream.bernoulli(0.5)) out.coords[i] = b.coords[i];
  }
  return out;
}

std::size_t tournament_select(std::span<const Candidate> pop, std::size_t k, KeyKind kind, RandomStream& stream) {
  if (pop.empty()) throw std::invalid_argument("tournament_select: empty population");
  std::size_t best = pop.size();
  double best_key = 0.0;
  for (std::size_t draw = 0; draw < std::max<std::size_t>(k, 1); ++draw) {
    const auto idx = static_cast<std::size_t>(stream.below(pop.size()));
    const double key = key_of(pop[idx], kind);
    if (best == pop.size() || key > best_key || (key == best_key && idx < best)) {
      best = idx;
      best_key = key;
    }
  }
  return best;
}

std::vector<UnitVector> breed(std::span<const Candidate> pop, std::size_t count, KeyKind kind, const EAParams& params,
                              const DesignSpace& space, RandomStream& stream) {
  std::vector<UnitVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& a = pop[tournament_select(pop, params.tournament_k, kind, stream)];
    const auto& b = pop[tournament_select(pop, params.tournament_k, kind, stream)];
    out.push_back(mutate(crossover(a.vector, b.vector, params, stream), params, space, stream));
  }
  return out;
}

std::vector<Candidate> rank(std::vector<Candidate> pop, KeyKind kind) {
  std::stable_sort(pop.begin(), pop.end(),
                   [kind](const Candidate& a, const Candidate& b) { return key_of(a, kind) > key_of(b, kind); });
  return pop;
}

std::vector<Candidate> merge_generation(std::span<const Candidate> pop, std::vector<UnitVector> offspring,
                                        const std::vector<double>& keys, KeyKind kind) {
  if (keys.size() != offspring.size()) throw std::invalid_argument("merge_generation: key count mismatch");
  std::vector<Candidate> next;
  next.reserve(offspring.size() + 1);
  if (!pop.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
      if (key_of(pop[i], kind) > key_of(pop[best], kind)) best = i;
    }
    next.push_back(pop[best]);
  }
  for (std::size_t i = 0; i < offspring.size(); ++i) {
    Candidate c{std::move(offspring[i]), std::nullopt, std::nullopt};
    (kind == KeyKind::predicted ? c.predicted : c.measured) = keys[i];
    next.push_back(std::move(c));
  }
  return rank(std::move(next), kind);
}

std::vector<Candidate> evolve(std::vector<Candidate> pop, std::size_t generations, KeyKind kind, const BatchKey& key,
                              const EAParams& params, const DesignSpace& space, RandomStream& stream,
                              std::optional<std::size_t> offspring) {
  if (pop.empty()) throw std::invalid_argument("evolve: empty population");
  const std::size_t count = offspring.value_or(params.population_size - 1);
  for (std::size_t g = 0; g < generations; ++g) {
    auto children = breed(pop, count, kind, params, space, stream);
    const auto keys = key(children);
    pop = merge_generation(pop, std::move(children), keys, kind);
  }
  return rank(std::move(pop), kind);
}

std::vector<Candidate> evolve_on_model(const SurrogateModel& model, const Composer& context,
                                       std::span<const UnitVector> current, const EAParams& params,
                                       const DesignSpace& space, RandomStream& stream) {
  const auto immigrants = static_cast<std::size_t>(
      std::llround(params.immigrant_fraction * static_cast<double>(params.population_size)));
  const std::size_t carried = std::min(current.size(), params.population_size - std::min(immigrants, params.population_size));
  std::vector<UnitVector> initial(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(carried));
  while (initial.size() < params.population_size) initial.push_back(random_unit_vector(space, stream));

  const BatchKey key = [&](std::span<const UnitVector> batch) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& v : batch) out.push_back(model.predict(context(v)));
    return out;
  };
  const auto keys = key(initial);
  std::vector<Candidate> pop;
  pop.reserve(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) pop.push_back({std::move(initial[i]), keys[i], std::nullopt});
  return evolve(rank(std::move(pop), KeyKind::predicted), params.generations_on_model, KeyKind::predicted, key, params,
                space, stream);
}

bool novelty_filter(const UnitVector& candidate, std::span<const UnitVector> archive, double eps) {
  for (const auto& a : archive) {
    if (euclidean_distance(candidate.coords, a.coords) < eps) return false;
  }
  return true;
}

}  // namespace aeromine
