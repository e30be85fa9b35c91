#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace aeromine {

/// Bind failures and unusable data directories.
class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceEvent {
  std::uint64_t id = 0;
  std::string type;
  nlohmann::json data;
};

struct EventBatch {
  std::vector<ServiceEvent> events;
  /// The client's last-seen id is unknown to this process; the batch starts from the beginning.
  bool reset = false;
  /// The run has stopped and every event has been delivered.
  bool complete = false;
};

/// "host:port", ":port" or "port".
std::pair<std::string, int> parse_bind_address(const std::string& address);

/// Runs, their journals and the HTTP endpoints under /api/v1.
///
/// Every run owns one journal file `<run_id>.jsonl` in the data directory.
/// Constructing a service resumes all runs found there.
class Service {
 public:
  explicit Service(std::string data_dir, bool durable = true);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ServiceResponse create_run(const nlohmann::json& body, const std::string& idempotency_key = {});
  ServiceResponse get_run(const std::string& run_id) const;
  ServiceResponse get_pending(const std::string& run_id) const;
  ServiceResponse submit_result(const std::string& run_id, const nlohmann::json& body,
                                const std::string& idempotency_key = {});
  ServiceResponse get_archive(const std::string& run_id, std::optional<std::size_t> position) const;
  ServiceResponse get_surrogate(const std::string& run_id, std::size_t position) const;

  /// Events after `last_seen`, waiting up to `wait` when there are none yet.
  /// Returns nullopt for an unknown run.
  std::optional<EventBatch> events(const std::string& run_id, std::uint64_t last_seen,
                                   std::chrono::milliseconds wait) const;

  /// Blocks until the run stops or the timeout passes; true if it stopped.
  bool wait_stopped(const std::string& run_id, std::chrono::milliseconds timeout) const;
  std::vector<std::string> run_ids() const;
  const std::string& data_dir() const;

  /// Binds the HTTP server; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aeromine
