#pragma once

#include <cstdint>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeromine/oracle.hpp"

namespace aeromine {

enum class PendingStatus { awaiting, submitted, cancelled };
std::string to_string(PendingStatus s);

struct PendingEvaluation {
  std::string pending_id;
  ArrayConfiguration configuration;
  std::string issued_at;
  PendingStatus status = PendingStatus::awaiting;
  std::optional<Measurement> measurement;
};

class QueueClosedError : public std::runtime_error {
 public:
  QueueClosedError() : std::runtime_error("queue closed") {}
};

class UnknownPendingError : public std::runtime_error {
 public:
  explicit UnknownPendingError(const std::string& id) : std::runtime_error("unknown id: " + id) {}
};

class AlreadySubmittedError : public std::runtime_error {
 public:
  explicit AlreadySubmittedError(const std::string& id)
      : std::runtime_error("already submitted: " + id) {}
};

class NotAwaitingError : public std::runtime_error {
 public:
  explicit NotAwaitingError(const std::string& id) : std::runtime_error("not awaiting: " + id) {}
};

struct CellIssue {
  std::size_t speed;
  std::size_t position;
  std::string reason;
};

class DimensionMismatchError : public std::runtime_error {
 public:
  DimensionMismatchError(std::string what, std::vector<CellIssue> issues)
      : std::runtime_error(std::move(what)), issues_(std::move(issues)) {}
  const std::vector<CellIssue>& issues() const { return issues_; }

 private:
  std::vector<CellIssue> issues_;
};

/// Checks a readings matrix against a configuration: shape, then every cell finite.
/// Negative power is allowed.
void check_readings(const std::vector<std::vector<double>>& rows, const ArrayConfiguration& config);

/// Serialized hand-off point between the engine and whoever measures the
/// physical rig. propose/submit/cancel are atomic with respect to each other.
class ManualQueue {
 public:
  using Listener = std::function<void(const PendingEvaluation&)>;

  /// Appends an awaiting entry. When `pending_id` is empty an id is generated.
  /// Proposing an id that is already awaiting returns it unchanged.
  std::string propose(const ArrayConfiguration& config, std::string pending_id = {});

  Measurement submit(const std::string& pending_id, const std::vector<std::vector<double>>& rows,
                     const std::string& idempotency_key = {});

  /// Blocks until one of `ids` has been submitted and returns the earliest
  /// submitted of them. Throws
  /// QueueClosedError if the queue closes first.
  std::string wait_any(const std::vector<std::string>& ids);
  Measurement measurement(const std::string& pending_id) const;

  /// Cancels every awaiting entry; later proposals fail.
  void close();
  bool closed() const;

  std::vector<PendingEvaluation> snapshot() const;
  std::optional<PendingEvaluation> find(const std::string& pending_id) const;

  /// Called under the queue lock after each propose/submit/cancel.
  void set_listener(Listener listener);

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<PendingEvaluation> entries_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::uint64_t> submitted_at_;
  std::uint64_t submissions_ = 0;
  std::size_t next_id_ = 1;
  bool closed_ = false;
  Listener listener_;
};

/// Oracle backed by a ManualQueue: each request becomes a pending evaluation
/// and results are reported in submission order.
class ManualOracle final : public Oracle {
 public:
  explicit ManualOracle(ManualQueue& queue) : queue_(queue) {}

  Provenance provenance() const override { return Provenance::manual; }
  Measurement evaluate(const EvaluationRequest& request) override;
  void evaluate_batch(std::span<const EvaluationRequest> requests,
                      const std::function<void(std::size_t, Measurement)>& on_result) override;

 private:
  ManualQueue& queue_;
};

}  // namespace aeromine
