#include "aeromine/manual_queue.hpp"

#include <algorithm>
#include <cmath>

namespace aeromine {

std::string to_string(PendingStatus s) {
  switch (s) {
    case PendingStatus::awaiting: return "awaiting";
    case PendingStatus::submitted: return "submitted";
    case PendingStatus::cancelled: return "cancelled";
  }
  return "unknown";
}

void check_readings(const std::vector<std::vector<double>>& rows, const ArrayConfiguration& config) {
  const std::size_t speeds = config.wind_speeds.size();
  const std::size_t positions = config.positions();
  std::vector<CellIssue> issues;
  if (rows.size() != speeds) {
    throw DimensionMismatchError("expected " + std::to_string(speeds) + " wind-speed rows, got " +
                                     std::to_string(rows.size()),
                                 {});
  }
  for (std::size_t v = 0; v < speeds; ++v) {
    if (rows[v].size() != positions) {
      issues.push_back({v, rows[v].size(), "row has " + std::to_string(rows[v].size()) +
                                               " cells, expected " + std::to_string(positions)});
      continue;
    }
    for (std::size_t i = 0; i < positions; ++i) {
      if (!std::isfinite(rows[v][i])) issues.push_back({v, i, "not a finite number"});
    }
  }
  if (!issues.empty()) throw DimensionMismatchError("readings do not match the configuration", std::move(issues));
}

std::string ManualQueue::propose(const ArrayConfiguration& config, std::string pending_id) {
  std::lock_guard lock(mu_);
  if (closed_) throw QueueClosedError();
  if (pending_id.empty()) {
    do {
      pending_id = "p" + std::to_string(next_id_++);
    } while (index_.count(pending_id) != 0);
  } else if (auto it = index_.find(pending_id); it != index_.end()) {
    if (entries_[it->second].status == PendingStatus::awaiting) return pending_id;
    throw NotAwaitingError(pending_id);
  }
  index_[pending_id] = entries_.size();
  entries_.push_back({pending_id, config, utc_timestamp(), PendingStatus::awaiting, std::nullopt});
  if (listener_) listener_(entries_.back());
  return pending_id;
}

Measurement ManualQueue::submit(const std::string& pending_id, const std::vector<std::vector<double>>& rows,
                                const std::string& idempotency_key) {
  std::lock_guard lock(mu_);
  auto it = index_.find(pending_id);
  if (it == index_.end()) throw UnknownPendingError(pending_id);
  auto& entry = entries_[it->second];
  if (entry.status == PendingStatus::submitted) throw AlreadySubmittedError(pending_id);
  if (entry.status == PendingStatus::cancelled) throw NotAwaitingError(pending_id);
  check_readings(rows, entry.configuration);

  Measurement m;
  m.readings = Readings::from_rows(rows);
  m.fitness = aggregate_fitness(m.readings);
  m.provenance = Provenance::manual;
  m.timestamp = utc_timestamp();
  m.idempotency_key = idempotency_key;
  entry.measurement = m;
  entry.status = PendingStatus::submitted;
  submitted_at_[pending_id] = ++submissions_;
  if (listener_) listener_(entry);
  cv_.notify_all();
  return m;
}

std::string ManualQueue::wait_any(const std::vector<std::string>& ids) {
  std::unique_lock lock(mu_);
  for (;;) {
    const std::string* first = nullptr;
    for (const auto& id : ids) {
      auto it = index_.find(id);
      if (it == index_.end()) throw UnknownPendingError(id);
      if (entries_[it->second].status != PendingStatus::submitted) continue;
      if (first == nullptr || submitted_at_.at(id) < submitted_at_.at(*first)) first = &id;
    }
    if (first != nullptr) return *first;
    if (closed_) throw QueueClosedError();
    cv_.wait(lock);
  }
}

Measurement ManualQueue::measurement(const std::string& pending_id) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(pending_id);
  if (it == index_.end()) throw UnknownPendingError(pending_id);
  const auto& entry = entries_[it->second];
  if (!entry.measurement) throw NotAwaitingError(pending_id);
  return *entry.measurement;
}

void ManualQueue::close() {
  std::lock_guard lock(mu_);
  if (closed_) return;
  closed_ = true;
  for (auto& e : entries_) {
    if (e.status == PendingStatus::awaiting) {
      e.status = PendingStatus::cancelled;
      if (listener_) listener_(e);
    }
  }
  cv_.notify_all();
}

bool ManualQueue::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::vector<PendingEvaluation> ManualQueue::snapshot() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::optional<PendingEvaluation> ManualQueue::find(const std::string& pending_id) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(pending_id);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

void ManualQueue::set_listener(Listener listener) {
  std::lock_guard lock(mu_);
  listener_ = std::move(listener);
}

Measurement ManualOracle::evaluate(const EvaluationRequest& request) {
  const auto id = queue_.propose(request.configuration, request.pending_id);
  queue_.wait_any({id});
  return queue_.measurement(id);
}

void ManualOracle::evaluate_batch(std::span<const EvaluationRequest> requests,
                                  const std::function<void(std::size_t, Measurement)>& on_result) {
  std::vector<std::string> ids;
  ids.reserve(requests.size());
  for (const auto& r : requests) ids.push_back(queue_.propose(r.configuration, r.pending_id));
  std::vector<std::string> outstanding = ids;
  while (!outstanding.empty()) {
    const auto done = queue_.wait_any(outstanding);
    outstanding.erase(std::find(outstanding.begin(), outstanding.end(), done));
    const auto idx = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), done) - ids.begin());
    on_result(idx, queue_.measurement(done));
  }
}

}  // namespace aeromine
