#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeromine/config.hpp"
#include "aeromine/journal.hpp"
#include "aeromine/manual_queue.hpp"
#include "aeromine/optimizer.hpp"
#include "aeromine/oracle.hpp"
#include "aeromine/surrogate.hpp"

namespace aeromine {

enum class RunStatus { running, awaiting_measurement, finished, cancelled };
std::string to_string(RunStatus status);

/// Maps between array configurations and the vectors the optimizer and the
/// surrogates work with. A position's candidate vector is its normalized
/// genome, followed by normalized spacing when spacing evolves. A surrogate
/// input is every position's normalized genome in order, then spacing.
class DesignCodec {
 public:
  explicit DesignCodec(const RunConfig& config);

  const DesignSpace& candidate_space() const { return candidate_space_; }
  std::size_t surrogate_dim() const;

  UnitVector candidate_vector(const ArrayConfiguration& config, std::size_t position) const;
  UnitVector surrogate_input(const ArrayConfiguration& config) const;
  Genome genome_of(const UnitVector& candidate) const;
  double spacing_of(const UnitVector& candidate) const;

  /// Snaps to the grid and applies the configuration's pins for `position`.
  UnitVector settle(std::size_t position, const UnitVector& candidate) const;
  Genome pin_genome(std::size_t position, Genome genome) const;

 private:
  DesignSpace space_;
  DesignSpace candidate_space_;
  LayoutBounds layout_;
  bool spacing_evolves_;
  double default_spacing_;
  std::vector<std::vector<std::pair<std::size_t, double>>> pins_;
};

struct PositionState {
  /// Indices into RunState::records, in journal order.
  std::vector<std::size_t> archive;
  /// Best measured record of the archive (first on ties).
  std::optional<std::size_t> elite;
  std::vector<Candidate> population;
  std::optional<SurrogateModel> surrogate;
};

struct RunState {
  std::vector<EvaluationRecord> records;
  std::vector<PositionState> positions;
  /// Round in progress, or the next one to run.
  std::uint64_t round = 0;
  std::optional<std::size_t> best;
  RunStatus status = RunStatus::running;

  std::size_t oracle_calls() const { return records.size(); }
  std::optional<double> best_fitness() const;
};

/// Elites as they stood when a round began.
struct EliteSnapshot {
  std::vector<std::optional<std::size_t>> elites;
  std::optional<std::size_t> best;
};

struct Proposal {
  std::uint64_t round = 0;
  std::size_t position = 0;
  std::size_t slot = 0;
  ProposalSource source = ProposalSource::seed_random;
  UnitVector vector;
  ArrayConfiguration configuration;
  std::optional<double> predicted;

  std::string pending_id() const;
};

struct RunResult {
  ArrayConfiguration best_configuration;
  double best_fitness = 0.0;
  std::size_t oracle_calls = 0;
  /// Last round that produced a record; 0 when only seeds were evaluated.
  std::uint64_t rounds = 0;
  RunStatus status = RunStatus::running;
  /// Best fitness after each oracle call.
  std::vector<double> best_history;
};

RunResult summarize(const RunState& state);

/// 1-based oracle-call count at which fitness first reached `target`.
std::optional<std::size_t> evaluations_to_reach(std::span<const EvaluationRecord> records, double target);

class EngineObserver {
 public:
  virtual ~EngineObserver() = default;
  virtual void on_record(const EvaluationRecord&) {}
  virtual void on_pending(const PendingNote&) {}
  virtual void on_round(std::uint64_t /*round*/) {}
  virtual void on_status(RunStatus) {}
};

struct EngineOptions {
  /// Compute the positions' proposals of a round on separate threads.
  bool parallel_positions = true;
};

/// The design-mining loop. All state derives from the records, so an engine
/// built from a journal prefix continues exactly as the original run would.
///
/// Round 0 seeds every position's archive. Each later round gives every
/// position one iteration against the elites as they stood at the start of
/// the round: fit the position's surrogate, invert it with the EA, and send
/// the best novel designs to the oracle. In baseline mode the surrogate is
/// skipped and one EA generation per position is evaluated directly.
class Engine {
 public:
  Engine(RunConfig config, RunMode mode, Oracle& oracle, JournalSink* sink = nullptr, EngineOptions options = {});
  /// Resumes from journaled records.
  Engine(RunConfig config, RunMode mode, Oracle& oracle, std::vector<EvaluationRecord> records,
         JournalSink* sink = nullptr, EngineOptions options = {});

  const RunConfig& config() const { return config_; }
  RunMode mode() const { return mode_; }
  const DesignCodec& codec() const { return codec_; }

  /// Thread-safe copy of the current state.
  RunState state() const;
  RunResult result() const;

  /// Completes the current round. Returns false once the run is finished or cancelled.
  bool step();
  RunResult run();

  /// Runs one position's share of the current round (surrogate mode).
  /// The round advances once every position has run.
  void mining_iteration(std::size_t position);

  /// Pure with respect to records of earlier rounds.
  std::vector<Proposal> plan_position(std::uint64_t round, std::size_t position) const;

  ArrayConfiguration compose(std::size_t position, const Genome& genome, double spacing,
                             const EliteSnapshot& snapshot) const;
  EliteSnapshot snapshot(std::uint64_t round) const;

  void set_observer(EngineObserver* observer) { observer_ = observer; }
  void cancel();
  bool cancelled() const { return cancel_.load(); }

 private:
  std::size_t planned_slots(std::uint64_t round, std::size_t position) const;
  std::size_t count_before(std::uint64_t round) const;
  std::uint64_t current_round() const;
  bool slot_recorded(std::uint64_t round, std::size_t position, std::size_t slot) const;
  std::optional<double> recorded_fitness(std::uint64_t round, std::size_t position, std::size_t slot) const;

  std::vector<Proposal> plan_seeds(std::size_t position, std::size_t count) const;
  std::vector<Proposal> plan_surrogate(std::uint64_t round, std::size_t position, std::size_t count,
                                       SurrogateModel* model_out, std::vector<Candidate>* population_out) const;
  std::vector<Candidate> baseline_population(std::size_t position, std::uint64_t round) const;
  std::vector<Candidate> archive_population(std::size_t position, std::uint64_t round) const;

  void evaluate(const std::vector<Proposal>& proposals);
  void run_baseline_position(std::uint64_t round, std::size_t position, const EliteSnapshot& snapshot);
  void finish_round_if_complete();
  void apply(EvaluationRecord record);
  void set_status(RunStatus status);

  RunConfig config_;
  RunMode mode_;
  DesignCodec codec_;
  Oracle& oracle_;
  JournalSink* sink_;
  EngineOptions options_;
  EngineObserver* observer_ = nullptr;
  std::atomic<bool> cancel_{false};

  mutable std::mutex mu_;
  RunState state_;
};

/// Rebuilds the state a run had after the given records.
RunState resume(const RunConfig& config, RunMode mode, std::vector<EvaluationRecord> records);

/// Seeding round only.
RunState seed_archives(const RunConfig& config, Oracle& oracle, JournalSink* sink = nullptr);

/// `genome` at `position`, current elites elsewhere.
ArrayConfiguration compose_array(const RunConfig& config, const RunState& state, std::size_t position,
                                 const Genome& genome, std::optional<double> spacing = std::nullopt);

RunResult run(const RunConfig& config, Oracle& oracle, JournalSink* sink = nullptr, EngineOptions options = {});
RunResult baseline_run(const RunConfig& config, Oracle& oracle, JournalSink* sink = nullptr,
                       EngineOptions options = {});

}  // namespace aeromine
