#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aeromine/config.hpp"
#include "aeromine/oracle.hpp"

namespace aeromine {

inline constexpr int kJournalVersion = 1;

enum class ProposalSource { seed_human, seed_random, surrogate, baseline, fallback_mutation };
std::string to_string(ProposalSource s);
std::optional<ProposalSource> parse_proposal_source(const std::string& text);

enum class RunMode { surrogate, baseline };
std::string to_string(RunMode mode);

struct EvaluationRecord {
  std::uint64_t record_id = 0;
  std::uint64_t round = 0;
  /// 0-based; serialized 1-based.
  std::size_t position = 0;
  /// Index of this evaluation within its position's round.
  std::size_t slot = 0;
  ProposalSource source = ProposalSource::seed_random;
  ArrayConfiguration configuration;
  Readings readings;
  double fitness = 0.0;
  Provenance provenance = Provenance::synthetic;
  std::string pending_id;
  std::string idempotency_key;
  std::string timestamp;

  bool operator==(const EvaluationRecord&) const = default;
};

/// A manual-oracle hand-off, journaled when issued.
struct PendingNote {
  std::string pending_id;
  std::uint64_t round = 0;
  std::size_t position = 0;
  std::size_t slot = 0;
  ArrayConfiguration configuration;
  std::string timestamp;
};

struct JournalHeader {
  int version = kJournalVersion;
  std::string run_id;
  RunMode mode = RunMode::surrogate;
  RunConfig config;
  std::string created;
  /// Key of the request that created the run, if any.
  std::string idempotency_key;
};

class JournalError : public std::runtime_error {
 public:
  JournalError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json header_to_json(const JournalHeader& header);
nlohmann::json record_to_json(const EvaluationRecord& record, const DesignSpace& space);
EvaluationRecord record_from_json(const nlohmann::json& doc, const DesignSpace& space);

/// Where the engine sends records. Implementations must persist a record
/// before append returns.
class JournalSink {
 public:
  virtual ~JournalSink() = default;
  virtual void append(const EvaluationRecord& record) = 0;
  virtual void note_pending(const PendingNote&) {}
};

/// Keeps records in memory. The first record may carry any id, so a resumed
/// run can append to a fresh instance.
class MemoryJournal final : public JournalSink {
 public:
  void append(const EvaluationRecord& record) override;
  const std::vector<EvaluationRecord>& records() const { return records_; }

 private:
  std::vector<EvaluationRecord> records_;
};

/// Line-delimited journal file: a header line, then one JSON document per line.
class JournalWriter final : public JournalSink {
 public:
  /// Creates a new journal; fails if the file already exists.
  static JournalWriter create(const std::string& path, const JournalHeader& header, bool durable = true);
  /// Opens an existing journal for appending after its last record.
  static JournalWriter open(const std::string& path, bool durable = true);

  JournalWriter(JournalWriter&& other) noexcept;
  JournalWriter& operator=(JournalWriter&& other) noexcept;
  JournalWriter(const JournalWriter&) = delete;
  JournalWriter& operator=(const JournalWriter&) = delete;
  ~JournalWriter() override;

  void append(const EvaluationRecord& record) override;
  void note_pending(const PendingNote& note) override;

  const std::string& path() const { return path_; }
  std::uint64_t last_id() const { return last_id_; }
  const JournalHeader& header() const { return header_; }

 private:
  JournalWriter(std::string path, int fd, JournalHeader header, std::uint64_t last_id, bool durable);
  void write_line(const std::string& line);

  std::string path_;
  int fd_ = -1;
  JournalHeader header_;
  std::uint64_t last_id_ = 0;
  bool durable_ = true;
};

struct LoadedJournal {
  JournalHeader header;
  std::vector<EvaluationRecord> records;
  std::vector<PendingNote> pending;
  /// Set when a partial final line was discarded.
  bool truncated_tail = false;
};

LoadedJournal load_journal(const std::string& path);
LoadedJournal parse_journal(const std::string& text);

/// Canonical form for determinism checks: timestamps and the run id removed.
std::string canonical_journal(const std::string& text);

/// Flat table, one row per record, fixed column order (see docs/journal_format.md).
std::string export_csv(const LoadedJournal& journal);

}  // namespace aeromine
