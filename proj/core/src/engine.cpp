#include "aeromine/engine.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>

namespace aeromine {

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::awaiting_measurement: return "awaiting_measurement";
    case RunStatus::finished: return "finished";
    case RunStatus::cancelled: return "cancelled";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// DesignCodec

DesignCodec::DesignCodec(const RunConfig& config)
    : space_(config.space),
      candidate_space_(config.space),
      layout_(config.layout),
      spacing_evolves_(config.spacing_evolves()),
      default_spacing_(config.default_spacing()),
      pins_(config.positions) {
  if (spacing_evolves_) {
    candidate_space_ = candidate_space_.with(
        ParameterSpec::continuous("spacing", config.layout.lower, config.layout.upper, "rotor diameters"));
  }
  for (const auto& pin : config.pins) {
    const auto idx = space_.index_of(pin.parameter);
    if (!idx) continue;
    for (std::size_t p = 0; p < config.positions; ++p) {
      if (!pin.position || *pin.position == p) pins_[p].emplace_back(*idx, pin.value);
    }
  }
}

std::size_t DesignCodec::surrogate_dim() const {
  return pins_.size() * space_.size() + (spacing_evolves_ ? 1 : 0);
}

UnitVector DesignCodec::candidate_vector(const ArrayConfiguration& config, std::size_t position) const {
  UnitVector v = normalize(config.genomes.at(position), space_);
  if (spacing_evolves_) {
    v.coords.push_back(std::clamp((config.spacing - layout_.lower) / (layout_.upper - layout_.lower), 0.0, 1.0));
  }
  return v;
}

UnitVector DesignCodec::surrogate_input(const ArrayConfiguration& config) const {
  UnitVector v;
  v.coords.reserve(surrogate_dim());
  for (const auto& g : config.genomes) {
    const auto n = normalize(g, space_);
    v.coords.insert(v.coords.end(), n.coords.begin(), n.coords.end());
  }
  if (spacing_evolves_) {
    v.coords.push_back(std::clamp((config.spacing - layout_.lower) / (layout_.upper - layout_.lower), 0.0, 1.0));
  }
  return v;
}

Genome DesignCodec::genome_of(const UnitVector& candidate) const {
  UnitVector head;
  head.coords.assign(candidate.coords.begin(), candidate.coords.begin() + static_cast<std::ptrdiff_t>(space_.size()));
  return denormalize(head, space_);
}

double DesignCodec::spacing_of(const UnitVector& candidate) const {
  if (!spacing_evolves_) return default_spacing_;
  const double c = candidate.coords.at(space_.size());
  return std::clamp(layout_.lower + c * (layout_.upper - layout_.lower), layout_.lower, layout_.upper);
}

Genome DesignCodec::pin_genome(std::size_t position, Genome genome) const {
  for (const auto& [idx, value] : pins_.at(position)) genome.values[idx] = value;
  return genome;
}

UnitVector DesignCodec::settle(std::size_t position, const UnitVector& candidate) const {
  UnitVector out = snap(candidate, candidate_space_);
  if (pins_.at(position).empty()) return out;
  const auto pinned = normalize(pin_genome(position, genome_of(out)), space_);
  std::copy(pinned.coords.begin(), pinned.coords.end(), out.coords.begin());
  return out;
}

// ---------------------------------------------------------------------------
// RunState helpers

std::optional<double> RunState::best_fitness() const {
  if (!best) return std::nullopt;
  return records[*best].fitness;
}

std::string Proposal::pending_id() const {
  return "r" + std::to_string(round) + "-p" + std::to_string(position + 1) + "-s" + std::to_string(slot);
}

RunResult summarize(const RunState& state) {
  RunResult r;
  r.oracle_calls = state.records.size();
  r.rounds = state.records.empty() ? 0 : state.records.back().round;
  r.status = state.status;
  if (state.best) {
    r.best_configuration = state.records[*state.best].configuration;
    r.best_fitness = state.records[*state.best].fitness;
  }
  double best = 0.0;
  for (std::size_t i = 0; i < state.records.size(); ++i) {
    best = i == 0 ? state.records[i].fitness : std::max(best, state.records[i].fitness);
    r.best_history.push_back(best);
  }
  return r;
}

std::optional<std::size_t> evaluations_to_reach(std::span<const EvaluationRecord> records, double target) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].fitness >= target) return i + 1;
  }
  return std::nullopt;
}

namespace {

void check_record(const RunConfig& config, const EvaluationRecord& r, std::uint64_t expected_id) {
  if (r.record_id != expected_id) throw std::invalid_argument("records are not gapless from 1");
  if (r.position >= config.positions) throw std::invalid_argument("record position out of range");
  if (r.configuration.positions() != config.positions) {
    throw std::invalid_argument("record has the wrong number of turbines");
  }
  check_configuration(r.configuration, config.space, config.layout);
}

}  // namespace

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(RunConfig config, RunMode mode, Oracle& oracle, JournalSink* sink, EngineOptions options)
    : Engine(std::move(config), mode, oracle, {}, sink, options) {}

Engine::Engine(RunConfig config, RunMode mode, Oracle& oracle, std::vector<EvaluationRecord> records,
               JournalSink* sink, EngineOptions options)
    : config_(std::move(config)), mode_(mode), codec_(config_), oracle_(oracle), sink_(sink), options_(options) {
  if (auto v = validate_config(config_); !v.empty()) throw ConfigError(std::move(v));
  if (records.size() > config_.budget) throw std::invalid_argument("journal holds more records than the budget");
  state_.positions.resize(config_.positions);
  for (auto& r : records) {
    check_record(config_, r, state_.records.size() + 1);
    apply(std::move(r));
  }
  state_.round = current_round();
  if (state_.records.size() >= config_.budget) state_.status = RunStatus::finished;
  for (std::size_t p = 0; p < config_.positions; ++p) {
    state_.positions[p].population =
        mode_ == RunMode::baseline ? baseline_population(p, state_.round) : archive_population(p, state_.round);
  }
}

RunState Engine::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

RunResult Engine::result() const { return summarize(state()); }

void Engine::cancel() { cancel_.store(true); }

void Engine::set_status(RunStatus status) {
  {
    std::lock_guard lock(mu_);
    if (state_.status == status) return;
    state_.status = status;
  }
  if (observer_) observer_->on_status(status);
}

void Engine::apply(EvaluationRecord record) {
  const std::size_t idx = state_.records.size();
  const std::size_t p = record.position;
  const double fitness = record.fitness;
  state_.records.push_back(std::move(record));
  auto& pos = state_.positions[p];
  pos.archive.push_back(idx);
  if (!pos.elite || fitness > state_.records[*pos.elite].fitness) pos.elite = idx;
  if (!state_.best || fitness > state_.records[*state_.best].fitness) state_.best = idx;
}

std::size_t Engine::count_before(std::uint64_t round) const {
  // Records are journaled in round order.
  std::size_t n = 0;
  while (n < state_.records.size() && state_.records[n].round < round) ++n;
  return n;
}

std::size_t Engine::planned_slots(std::uint64_t round, std::size_t position) const {
  if (round == 0) return config_.seeds_per_position;
  const std::size_t per = mode_ == RunMode::surrogate ? config_.proposals_per_iteration : config_.ea.population_size - 1;
  const std::size_t before = count_before(round) + per * position;
  if (before >= config_.budget) return 0;
  return std::min(per, config_.budget - before);
}

bool Engine::slot_recorded(std::uint64_t round, std::size_t position, std::size_t slot) const {
  return recorded_fitness(round, position, slot).has_value();
}

std::optional<double> Engine::recorded_fitness(std::uint64_t round, std::size_t position, std::size_t slot) const {
  for (auto it = state_.records.rbegin(); it != state_.records.rend() && it->round >= round; ++it) {
    if (it->round == round && it->position == position && it->slot == slot) return it->fitness;
  }
  return std::nullopt;
}

std::uint64_t Engine::current_round() const {
  if (state_.records.empty()) return 0;
  const std::uint64_t last = state_.records.back().round;
  std::size_t planned = 0;
  for (std::size_t p = 0; p < config_.positions; ++p) planned += planned_slots(last, p);
  const std::size_t done = state_.records.size() - count_before(last);
  return done < planned ? last : last + 1;
}

EliteSnapshot Engine::snapshot(std::uint64_t round) const {
  EliteSnapshot snap;
  snap.elites.assign(config_.positions, std::nullopt);
  const std::size_t n = count_before(round);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = state_.records[i];
    auto& e = snap.elites[r.position];
    if (!e || r.fitness > state_.records[*e].fitness) e = i;
    if (!snap.best || r.fitness > state_.records[*snap.best].fitness) snap.best = i;
  }
  return snap;
}

ArrayConfiguration Engine::compose(std::size_t position, const Genome& genome, double spacing,
                                   const EliteSnapshot& snapshot) const {
  ArrayConfiguration c;
  c.genomes.resize(config_.positions);
  for (std::size_t q = 0; q < config_.positions; ++q) {
    if (q == position) {
      c.genomes[q] = genome;
      continue;
    }
    const auto& e = snapshot.elites.at(q);
    if (!e) throw std::logic_error("no elite for position " + std::to_string(q + 1));
    c.genomes[q] = state_.records[*e].configuration.genomes[q];
  }
  c.spacing = spacing;
  c.wind_speeds = config_.wind_speeds;
  return c;
}

std::vector<Candidate> Engine::archive_population(std::size_t position, std::uint64_t round) const {
  std::vector<Candidate> pop;
  for (std::size_t idx : state_.positions[position].archive) {
    const auto& r = state_.records[idx];
    if (r.round >= round) break;
    pop.push_back({codec_.candidate_vector(r.configuration, position), std::nullopt, r.fitness});
  }
  return rank(std::move(pop), KeyKind::measured);
}

std::vector<Candidate> Engine::baseline_population(std::size_t position, std::uint64_t round) const {
  std::map<std::uint64_t, std::vector<const EvaluationRecord*>> by_round;
  for (std::size_t idx : state_.positions[position].archive) {
    const auto& r = state_.records[idx];
    if (r.round < round) by_round[r.round].push_back(&r);
  }
  std::vector<Candidate> pop;
  for (auto& [rnd, recs] : by_round) {
    std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->slot < b->slot; });
    if (rnd == 0) {
      for (auto* r : recs) pop.push_back({codec_.candidate_vector(r->configuration, position), std::nullopt, r->fitness});
      pop = rank(std::move(pop), KeyKind::measured);
      continue;
    }
    std::vector<UnitVector> children;
    std::vector<double> keys;
    for (auto* r : recs) {
      children.push_back(codec_.candidate_vector(r->configuration, position));
      keys.push_back(r->fitness);
    }
    pop = merge_generation(pop, std::move(children), keys, KeyKind::measured);
  }
  return pop;
}

std::vector<Proposal> Engine::plan_seeds(std::size_t position, std::size_t count) const {
  std::vector<const SeedDesign*> human;
  for (const auto& s : config_.seed_designs) {
    if (s.position == position) human.push_back(&s);
  }
  std::vector<Proposal> out;
  for (std::size_t j = 0; j < count; ++j) {
    Proposal prop;
    prop.round = 0;
    prop.position = position;
    prop.slot = j;
    Genome genome;
    if (j < human.size()) {
      genome = codec_.pin_genome(position, human[j]->genome);
      prop.source = ProposalSource::seed_human;
    } else {
      auto stream = make_stream(config_.seed, position, 0, "seed-genome", j);
      genome = codec_.pin_genome(position, random_genome(config_.space, stream));
      prop.source = ProposalSource::seed_random;
    }
    auto peers = make_stream(config_.seed, position, 0, "seed-peers", j);
    prop.configuration.genomes.resize(config_.positions);
    for (std::size_t q = 0; q < config_.positions; ++q) {
      prop.configuration.genomes[q] = q == position ? genome : codec_.pin_genome(q, random_genome(config_.space, peers));
    }
    prop.configuration.spacing = config_.spacing_evolves()
                                     ? config_.layout.lower + peers.uniform() * (config_.layout.upper - config_.layout.lower)
                                     : config_.default_spacing();
    prop.configuration.wind_speeds = config_.wind_speeds;
    prop.vector = codec_.candidate_vector(prop.configuration, position);
    out.push_back(std::move(prop));
  }
  return out;
}

std::vector<Proposal> Engine::plan_surrogate(std::uint64_t round, std::size_t position, std::size_t count,
                                             SurrogateModel* model_out,
                                             std::vector<Candidate>* population_out) const {
  const auto snap = snapshot(round);
  Dataset data;
  std::vector<UnitVector> archive_vectors;
  for (std::size_t idx : state_.positions[position].archive) {
    const auto& r = state_.records[idx];
    if (r.round >= round) break;
    data.push_back({codec_.surrogate_input(r.configuration), r.fitness});
    archive_vectors.push_back(codec_.candidate_vector(r.configuration, position));
  }
  auto fit_stream = make_stream(config_.seed, position, round, "fit");
  const SurrogateModel model = fit(data, config_.fit, fit_stream);

  const auto current = archive_population(position, round);
  std::vector<UnitVector> current_vectors;
  for (const auto& c : current) current_vectors.push_back(c.vector);

  const Composer context = [&](const UnitVector& v) {
    const auto s = codec_.settle(position, v);
    return codec_.surrogate_input(compose(position, codec_.genome_of(s), codec_.spacing_of(s), snap));
  };
  auto evolve_stream = make_stream(config_.seed, position, round, "evolve");
  const auto ranked =
      evolve_on_model(model, context, current_vectors, config_.ea, codec_.candidate_space(), evolve_stream);

  std::vector<Proposal> out;
  auto make = [&](const UnitVector& settled, ProposalSource source) {
    Proposal prop;
    prop.round = round;
    prop.position = position;
    prop.slot = out.size();
    prop.source = source;
    prop.vector = settled;
    prop.configuration = compose(position, codec_.genome_of(settled), codec_.spacing_of(settled), snap);
    prop.predicted = model.predict(codec_.surrogate_input(prop.configuration));
    out.push_back(std::move(prop));
  };
  for (const auto& c : ranked) {
    if (out.size() >= count) break;
    const auto settled = codec_.settle(position, c.vector);
    if (!novelty_filter(settled, archive_vectors, config_.ea.novelty_eps)) continue;
    archive_vectors.push_back(settled);
    make(settled, ProposalSource::surrogate);
  }
  for (std::size_t j = 0; out.size() < count; ++j) {
    auto stream = make_stream(config_.seed, position, round, "fallback", j);
    make(codec_.settle(position, mutate(ranked.front().vector, config_.ea, codec_.candidate_space(), stream)),
         ProposalSource::fallback_mutation);
  }
  if (model_out) *model_out = model;
  if (population_out) *population_out = ranked;
  return out;
}

std::vector<Proposal> Engine::plan_position(std::uint64_t round, std::size_t position) const {
  const std::size_t count = planned_slots(round, position);
  if (count == 0) return {};
  if (round == 0) return plan_seeds(position, count);
  if (mode_ == RunMode::surrogate) return plan_surrogate(round, position, count, nullptr, nullptr);

  // Baseline offspring, reproduced without evaluating them.
  const auto snap = snapshot(round);
  auto stream = make_stream(config_.seed, position, round, "baseline");
  const auto pop = baseline_population(position, round);
  const auto children = breed(pop, count, KeyKind::measured, config_.ea, codec_.candidate_space(), stream);
  std::vector<Proposal> out;
  for (std::size_t i = 0; i < children.size(); ++i) {
    Proposal prop;
    prop.round = round;
    prop.position = position;
    prop.slot = i;
    prop.source = ProposalSource::baseline;
    prop.vector = codec_.settle(position, children[i]);
    prop.configuration =
        compose(position, codec_.genome_of(prop.vector), codec_.spacing_of(prop.vector), snap);
    out.push_back(std::move(prop));
  }
  return out;
}

void Engine::evaluate(const std::vector<Proposal>& proposals) {
  std::vector<const Proposal*> todo;
  for (const auto& p : proposals) {
    if (!slot_recorded(p.round, p.position, p.slot)) todo.push_back(&p);
  }
  if (todo.empty()) return;

  const bool manual = oracle_.provenance() == Provenance::manual;
  std::vector<EvaluationRequest> requests;
  for (const auto* p : todo) {
    EvaluationRequest req;
    req.configuration = p->configuration;
    req.noise_key = RandomKey{config_.seed, p->position, p->round, "noise/" + std::to_string(p->slot)};
    if (manual) req.pending_id = p->pending_id();
    requests.push_back(std::move(req));
  }
  if (manual) {
    for (const auto* p : todo) {
      const PendingNote note{p->pending_id(), p->round, p->position, p->slot, p->configuration, utc_timestamp()};
      if (sink_) sink_->note_pending(note);
      if (observer_) observer_->on_pending(note);
    }
    set_status(RunStatus::awaiting_measurement);
  }

  oracle_.evaluate_batch(requests, [&](std::size_t i, Measurement m) {
    const Proposal& p = *todo[i];
    EvaluationRecord r;
    r.record_id = state_.records.size() + 1;
    r.round = p.round;
    r.position = p.position;
    r.slot = p.slot;
    r.source = p.source;
    r.configuration = p.configuration;
    r.readings = std::move(m.readings);
    r.fitness = m.fitness;
    r.provenance = m.provenance;
    r.pending_id = requests[i].pending_id;
    r.timestamp = m.timestamp;
    r.idempotency_key = m.idempotency_key;
    if (sink_) sink_->append(r);
    {
      std::lock_guard lock(mu_);
      apply(r);
    }
    if (observer_) observer_->on_record(r);
  });
  if (manual) set_status(RunStatus::running);
}

void Engine::finish_round_if_complete() {
  const auto next = current_round();
  const bool done = state_.records.size() >= config_.budget;
  if (next != state_.round || done) {
    std::lock_guard lock(mu_);
    state_.round = next;
    for (std::size_t p = 0; p < config_.positions; ++p) {
      if (mode_ == RunMode::baseline) state_.positions[p].population = baseline_population(p, next);
    }
  }
  if (done) set_status(RunStatus::finished);
  else if (observer_ && next != 0) observer_->on_round(next);
}

void Engine::run_baseline_position(std::uint64_t round, std::size_t position, const EliteSnapshot& snap) {
  const std::size_t count = planned_slots(round, position);
  if (count == 0) return;
  auto stream = make_stream(config_.seed, position, round, "baseline");
  const BatchKey key = [&](std::span<const UnitVector> children) {
    std::vector<Proposal> props;
    for (std::size_t i = 0; i < children.size(); ++i) {
      Proposal prop;
      prop.round = round;
      prop.position = position;
      prop.slot = i;
      prop.source = ProposalSource::baseline;
      prop.vector = codec_.settle(position, children[i]);
      prop.configuration = compose(position, codec_.genome_of(prop.vector), codec_.spacing_of(prop.vector), snap);
      props.push_back(std::move(prop));
    }
    evaluate(props);
    std::vector<double> keys;
    for (const auto& p : props) keys.push_back(recorded_fitness(round, position, p.slot).value());
    return keys;
  };
  evolve(baseline_population(position, round), 1, KeyKind::measured, key, config_.ea, codec_.candidate_space(),
         stream, count);
}

bool Engine::step() {
  if (state_.status == RunStatus::finished || state_.status == RunStatus::cancelled) return false;
  if (cancel_.load()) {
    set_status(RunStatus::cancelled);
    return false;
  }
  if (state_.records.size() >= config_.budget) {
    set_status(RunStatus::finished);
    return false;
  }
  const std::uint64_t round = state_.round;
  try {
    if (round > 0 && mode_ == RunMode::baseline) {
      const auto snap = snapshot(round);
      for (std::size_t p = 0; p < config_.positions && !cancel_.load(); ++p) run_baseline_position(round, p, snap);
    } else {
      std::vector<std::vector<Proposal>> plans(config_.positions);
      std::vector<SurrogateModel> models(config_.positions);
      std::vector<std::vector<Candidate>> populations(config_.positions);
      auto plan = [&](std::size_t p) {
        const std::size_t count = planned_slots(round, p);
        if (count == 0) return;
        if (round == 0) plans[p] = plan_seeds(p, count);
        else plans[p] = plan_surrogate(round, p, count, &models[p], &populations[p]);
      };
      if (options_.parallel_positions && config_.positions > 1 && round > 0) {
        std::vector<std::future<void>> jobs;
        for (std::size_t p = 0; p < config_.positions; ++p) jobs.push_back(std::async(std::launch::async, plan, p));
        for (auto& j : jobs) j.get();
      } else {
        for (std::size_t p = 0; p < config_.positions; ++p) plan(p);
      }
      if (round > 0) {
        std::lock_guard lock(mu_);
        for (std::size_t p = 0; p < config_.positions; ++p) {
          if (plans[p].empty()) continue;
          state_.positions[p].surrogate = std::move(models[p]);
          state_.positions[p].population = std::move(populations[p]);
        }
      }
      for (std::size_t p = 0; p < config_.positions && !cancel_.load(); ++p) evaluate(plans[p]);
    }
  } catch (const QueueClosedError&) {
    set_status(RunStatus::cancelled);
    return false;
  }
  if (cancel_.load()) {
    set_status(RunStatus::cancelled);
    return false;
  }
  finish_round_if_complete();
  return state_.status == RunStatus::running;
}

void Engine::mining_iteration(std::size_t position) {
  if (position >= config_.positions) throw std::out_of_range("position out of range");
  if (state_.status != RunStatus::running) return;
  if (state_.records.size() >= config_.budget) {
    set_status(RunStatus::finished);
    return;
  }
  const std::uint64_t round = state_.round;
  if (round > 0 && mode_ == RunMode::baseline) {
    run_baseline_position(round, position, snapshot(round));
  } else {
    const std::size_t count = planned_slots(round, position);
    if (count > 0) {
      SurrogateModel model;
      std::vector<Candidate> population;
      auto plans = round == 0 ? plan_seeds(position, count)
                              : plan_surrogate(round, position, count, &model, &population);
      if (round > 0) {
        std::lock_guard lock(mu_);
        state_.positions[position].surrogate = std::move(model);
        state_.positions[position].population = std::move(population);
      }
      evaluate(plans);
    }
  }
  finish_round_if_complete();
}

RunResult Engine::run() {
  while (step()) {
  }
  return result();
}

// ---------------------------------------------------------------------------
// Free functions

namespace {

/// Oracle stand-in for rebuilding state; never asked to evaluate.
class NullOracle final : public Oracle {
 public:
  Provenance provenance() const override { return Provenance::synthetic; }
  Measurement evaluate(const EvaluationRequest&) override {
    throw std::logic_error("resume must not call the oracle");
  }
};

}  // namespace

RunState resume(const RunConfig& config, RunMode mode, std::vector<EvaluationRecord> records) {
  NullOracle oracle;
  Engine engine(config, mode, oracle, std::move(records));
  return engine.state();
}

RunState seed_archives(const RunConfig& config, Oracle& oracle, JournalSink* sink) {
  Engine engine(config, RunMode::surrogate, oracle, sink);
  if (engine.state().round == 0) engine.step();
  return engine.state();
}

ArrayConfiguration compose_array(const RunConfig& config, const RunState& state, std::size_t position,
                                 const Genome& genome, std::optional<double> spacing) {
  ArrayConfiguration c;
  c.genomes.resize(config.positions);
  for (std::size_t q = 0; q < config.positions; ++q) {
    if (q == position) {
      c.genomes[q] = genome;
      continue;
    }
    const auto& e = state.positions.at(q).elite;
    if (!e) throw std::invalid_argument("missing elite for position " + std::to_string(q + 1));
    c.genomes[q] = state.records[*e].configuration.genomes[q];
  }
  if (spacing) c.spacing = *spacing;
  else if (state.best) c.spacing = state.records[*state.best].configuration.spacing;
  else c.spacing = config.default_spacing();
  c.wind_speeds = config.wind_speeds;
  return c;
}

RunResult run(const RunConfig& config, Oracle& oracle, JournalSink* sink, EngineOptions options) {
  Engine engine(config, RunMode::surrogate, oracle, sink, options);
  return engine.run();
}

RunResult baseline_run(const RunConfig& config, Oracle& oracle, JournalSink* sink, EngineOptions options) {
  Engine engine(config, RunMode::baseline, oracle, sink, options);
  return engine.run();
}

}  // namespace aeromine
