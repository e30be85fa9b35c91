#include "aeromine/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "aeromine/config.hpp"
#include "aeromine/engine.hpp"
#include "aeromine/journal.hpp"
#include "aeromine/manual_queue.hpp"
#include "aeromine/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aeromine {

namespace {

constexpr const char* kJournalSuffix = ".jsonl";

ServiceResponse error_response(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

json ack_of(const std::string& run_id, const EvaluationRecord& r) {
  return {{"run_id", run_id},
          {"pending_id", r.pending_id},
          {"record_id", r.record_id},
          {"round", r.round},
          {"position", r.position + 1},
          {"fitness", r.fitness},
          {"idempotency_key", r.idempotency_key}};
}

json design_rows(const ArrayConfiguration& config, const DesignSpace& space) {
  json turbines = json::array();
  for (std::size_t p = 0; p < config.genomes.size(); ++p) {
    json params = json::array();
    for (std::size_t i = 0; i < space.parameters().size(); ++i) {
      const auto& spec = space.parameters()[i];
      params.push_back({{"name", spec.name},
                        {"value", format_value(spec, config.genomes[p].values[i])},
                        {"units", spec.units}});
    }
    turbines.push_back({{"position", p + 1}, {"parameters", std::move(params)}});
  }
  return turbines;
}

std::string random_run_id() {
  static std::mt19937_64 gen{std::random_device{}()};
  static std::mutex mu;
  std::lock_guard lock(mu);
  static const char* hex = "0123456789abcdef";
  std::string id = "run-";
  auto bits = gen();
  for (int i = 0; i < 12; ++i, bits >>= 4) id.push_back(hex[bits & 0xf]);
  return id;
}

std::vector<std::vector<double>> parse_rows(const json& doc) {
  if (!doc.is_array()) throw std::invalid_argument("readings must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : doc) {
    if (!row.is_array()) throw std::invalid_argument("readings must be an array of rows");
    std::vector<double> cells;
    for (const auto& cell : row) {
      if (!cell.is_number()) throw std::invalid_argument("readings cells must be numbers");
      cells.push_back(cell.get<double>());
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  const auto colon = address.rfind(':');
  std::string host = colon == std::string::npos ? "" : address.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? address : address.substr(colon + 1);
  if (host.empty()) host = "127.0.0.1";
  std::size_t used = 0;
  int port = -1;
  try {
    port = std::stoi(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || port < 0 || port > 65535) {
    throw std::invalid_argument("bad bind address: " + address);
  }
  return {host, port};
}

// One run: its journal, oracle, engine thread and event log.
struct RunEntry final : EngineObserver {
  std::string id;
  std::string path;
  RunConfig config;
  RunMode mode = RunMode::surrogate;
  std::string create_key;

  ManualQueue queue;
  std::unique_ptr<Oracle> oracle;
  std::optional<JournalWriter> writer;
  std::unique_ptr<Engine> engine;
  std::thread thread;

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  std::vector<ServiceEvent> log;
  std::map<std::string, json> acks;
  std::map<std::string, json> recorded;
  std::string failure;
  bool stopped = false;

  // Serializes submissions.
  std::mutex commands;

  void push(std::string type, json data) {
    std::lock_guard lock(mu);
    log.push_back({log.size() + 1, std::move(type), std::move(data)});
    cv.notify_all();
  }

  json record_event(const EvaluationRecord& r) const {
    return {{"record_id", r.record_id}, {"round", r.round},   {"position", r.position + 1},
            {"slot", r.slot},           {"fitness", r.fitness}, {"source", to_string(r.source)},
            {"pending_id", r.pending_id}};
  }

  void remember(const EvaluationRecord& r) {
    std::lock_guard lock(mu);
    if (!r.pending_id.empty()) recorded[r.pending_id] = ack_of(id, r);
    if (!r.idempotency_key.empty()) acks[r.idempotency_key] = ack_of(id, r);
  }

  void on_record(const EvaluationRecord& r) override {
    remember(r);
    push("record", record_event(r));
  }
  void on_pending(const PendingNote& n) override {
    push("pending", {{"pending_id", n.pending_id},
                     {"round", n.round},
                     {"position", n.position + 1},
                     {"slot", n.slot},
                     {"configuration", configuration_to_json(n.configuration, config.space)},
                     {"turbines", design_rows(n.configuration, config.space)}});
  }
  void on_round(std::uint64_t round) override { push("round", {{"round", round}}); }
  void on_status(RunStatus status) override { push("status", {{"status", to_string(status)}}); }

  void start() {
    thread = std::thread([this] {
      try {
        while (engine->step()) {
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failure = e.what();
      }
      push("stopped", {{"status", to_string(engine->state().status)}, {"error", failure}});
      std::lock_guard lock(mu);
      stopped = true;
      cv.notify_all();
    });
  }

  void shutdown() {
    if (engine) engine->cancel();
    queue.close();
    if (thread.joinable()) thread.join();
  }
};

struct Service::Impl {
  std::string data_dir;
  bool durable = true;

  mutable std::mutex mu;
  std::map<std::string, std::shared_ptr<RunEntry>> runs;
  std::map<std::string, std::string> created_by_key;

  httplib::Server server;
  std::atomic<bool> stopping{false};

  std::shared_ptr<RunEntry> find(const std::string& id) const {
    std::lock_guard lock(mu);
    auto it = runs.find(id);
    return it == runs.end() ? nullptr : it->second;
  }

  void attach(const std::shared_ptr<RunEntry>& entry, std::vector<EvaluationRecord> records) {
    if (entry->config.oracle == OracleKind::manual) entry->oracle = std::make_unique<ManualOracle>(entry->queue);
    else entry->oracle = std::make_unique<SyntheticOracle>(entry->config.space, entry->config.constants);
    for (const auto& r : records) {
      entry->remember(r);
      entry->push("record", entry->record_event(r));
    }
    entry->engine = std::make_unique<Engine>(entry->config, entry->mode, *entry->oracle, std::move(records),
                                             &*entry->writer);
    entry->engine->set_observer(entry.get());
    entry->push("status", {{"status", to_string(entry->engine->state().status)}});
    {
      std::lock_guard lock(mu);
      runs[entry->id] = entry;
      if (!entry->create_key.empty()) created_by_key[entry->create_key] = entry->id;
    }
    entry->start();
  }

  void recover() {
    for (const auto& item : fs::directory_iterator(data_dir)) {
      if (!item.is_regular_file() || item.path().extension() != kJournalSuffix) continue;
      auto loaded = load_journal(item.path().string());
      auto entry = std::make_shared<RunEntry>();
      entry->id = loaded.header.run_id;
      entry->path = item.path().string();
      entry->config = loaded.header.config;
      entry->mode = loaded.header.mode;
      entry->create_key = loaded.header.idempotency_key;
      entry->writer.emplace(JournalWriter::open(entry->path, durable));
      attach(entry, std::move(loaded.records));
    }
  }

  json created_body(const RunEntry& e) const {
    return {{"run_id", e.id},
            {"mode", to_string(e.mode)},
            {"oracle", to_string(e.config.oracle)},
            {"journal", e.path},
            {"status", "running"}};
  }
};

Service::Service(std::string data_dir, bool durable) : impl_(std::make_unique<Impl>()) {
  impl_->data_dir = std::move(data_dir);
  impl_->durable = durable;
  std::error_code ec;
  fs::create_directories(impl_->data_dir, ec);
  const auto probe = fs::path(impl_->data_dir) / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok") || !out.flush()) {
      throw ServiceError("data directory not writable: " + impl_->data_dir);
    }
  }
  fs::remove(probe, ec);
  impl_->recover();
}

Service::~Service() {
  stop();
  std::vector<std::shared_ptr<RunEntry>> all;
  {
    std::lock_guard lock(impl_->mu);
    for (auto& [id, e] : impl_->runs) all.push_back(e);
  }
  for (auto& e : all) e->shutdown();
}

const std::string& Service::data_dir() const { return impl_->data_dir; }

std::vector<std::string> Service::run_ids() const {
  std::lock_guard lock(impl_->mu);
  std::vector<std::string> ids;
  for (const auto& [id, e] : impl_->runs) ids.push_back(id);
  return ids;
}

ServiceResponse Service::create_run(const json& body, const std::string& idempotency_key) {
  static std::mutex create_mu;
  std::lock_guard create_lock(create_mu);
  if (!idempotency_key.empty()) {
    std::lock_guard lock(impl_->mu);
    if (auto it = impl_->created_by_key.find(idempotency_key); it != impl_->created_by_key.end()) {
      return {201, impl_->created_body(*impl_->runs.at(it->second))};
    }
  }
  if (!body.is_object()) return error_response(400, "body must be an object");
  for (const auto& [key, value] : body.items()) {
    if (key != "config" && key != "mode" && key != "oracle" && key != "seed" && key != "budget") {
      return error_response(400, "unknown key: " + key);
    }
  }
  if (!body.contains("config")) return error_response(400, "missing key: config");

  auto entry = std::make_shared<RunEntry>();
  try {
    json doc = body.at("config");
    if (body.contains("oracle")) {
      if (!doc.contains("oracle")) doc["oracle"] = json::object();
      doc["oracle"]["kind"] = body.at("oracle");
    }
    if (body.contains("seed")) doc["seed"] = body.at("seed");
    if (body.contains("budget")) doc["budget"] = body.at("budget");
    entry->config = parse_run_config(doc);
    const std::string mode = body.value("mode", "run");
    if (mode == "run") entry->mode = RunMode::surrogate;
    else if (mode == "baseline") entry->mode = RunMode::baseline;
    else return error_response(400, "mode: must be run or baseline");
  } catch (const ConfigError& e) {
    return error_response(400, "invalid configuration", {{"violations", e.violations()}});
  } catch (const std::exception& e) {
    return error_response(400, e.what());
  }

  JournalHeader header;
  header.mode = entry->mode;
  header.config = entry->config;
  header.created = utc_timestamp();
  header.idempotency_key = idempotency_key;
  for (;;) {
    header.run_id = random_run_id();
    if (impl_->find(header.run_id)) continue;
    const auto path = (fs::path(impl_->data_dir) / (header.run_id + kJournalSuffix)).string();
    if (fs::exists(path)) continue;
    try {
      entry->writer.emplace(JournalWriter::create(path, header, impl_->durable));
    } catch (const JournalError& e) {
      return error_response(500, e.what());
    }
    entry->path = path;
    break;
  }
  entry->id = header.run_id;
  entry->create_key = idempotency_key;
  impl_->attach(entry, {});
  return {201, impl_->created_body(*entry)};
}

ServiceResponse Service::get_run(const std::string& run_id) const {
  auto e = impl_->find(run_id);
  if (!e) return error_response(404, "unknown run: " + run_id);
  const RunState state = e->engine->state();
  const RunResult result = summarize(state);
  json elites = json::array();
  for (std::size_t p = 0; p < state.positions.size(); ++p) {
    json item = {{"position", p + 1}};
    if (auto idx = state.positions[p].elite) {
      const auto& r = state.records[*idx];
      item["record_id"] = r.record_id;
      item["fitness"] = r.fitness;
      item["genome"] = genome_to_json(r.configuration.genomes[p], e->config.space);
    }
    elites.push_back(std::move(item));
  }
  json body = {{"run_id", e->id},
               {"mode", to_string(e->mode)},
               {"oracle", to_string(e->config.oracle)},
               {"journal", e->path},
               {"status", to_string(state.status)},
               {"round", state.round},
               {"oracle_calls", state.oracle_calls()},
               {"budget", e->config.budget},
               {"positions", e->config.positions},
               {"seed", e->config.seed},
               {"elites", std::move(elites)},
               {"best_history", result.best_history}};
  if (state.best) {
    body["best_fitness"] = result.best_fitness;
    body["best_configuration"] = configuration_to_json(result.best_configuration, e->config.space);
  }
  {
    std::lock_guard lock(e->mu);
    if (!e->failure.empty()) body["error"] = e->failure;
  }
  return {200, std::move(body)};
}

ServiceResponse Service::get_pending(const std::string& run_id) const {
  auto e = impl_->find(run_id);
  if (!e) return error_response(404, "unknown run: " + run_id);
  json items = json::array();
  for (const auto& p : e->queue.snapshot()) {
    if (p.status != PendingStatus::awaiting) continue;
    items.push_back({{"pending_id", p.pending_id},
                     {"issued_at", p.issued_at},
                     {"status", to_string(p.status)},
                     {"wind_speeds", p.configuration.wind_speeds},
                     {"positions", p.configuration.positions()},
                     {"configuration", configuration_to_json(p.configuration, e->config.space)},
                     {"turbines", design_rows(p.configuration, e->config.space)}});
  }
  return {200, {{"run_id", e->id}, {"pending", std::move(items)}}};
}

ServiceResponse Service::submit_result(const std::string& run_id, const json& body,
                                       const std::string& idempotency_key) {
  auto e = impl_->find(run_id);
  if (!e) return error_response(404, "unknown run: " + run_id);
  if (!body.is_object()) return error_response(400, "body must be an object");
  std::string key = idempotency_key;
  if (key.empty() && body.contains("idempotency_key") && body["idempotency_key"].is_string()) {
    key = body["idempotency_key"].get<std::string>();
  }

  std::lock_guard command(e->commands);
  if (!key.empty()) {
    std::lock_guard lock(e->mu);
    if (auto it = e->acks.find(key); it != e->acks.end()) return {200, it->second};
  }
  if (!body.contains("pending_id") || !body["pending_id"].is_string()) {
    return error_response(400, "missing key: pending_id");
  }
  const std::string pending_id = body["pending_id"].get<std::string>();
  std::vector<std::vector<double>> rows;
  try {
    rows = parse_rows(body.value("readings", json()));
  } catch (const std::exception& ex) {
    return error_response(400, ex.what());
  }

  const auto entry = e->queue.find(pending_id);
  if (!entry) {
    std::lock_guard lock(e->mu);
    if (e->recorded.count(pending_id) != 0) return error_response(409, "stale pending_id: " + pending_id);
    return error_response(404, "unknown pending_id: " + pending_id);
  }
  if (entry->status != PendingStatus::awaiting) return error_response(409, "stale pending_id: " + pending_id);

  try {
    e->queue.submit(pending_id, rows, key);
  } catch (const DimensionMismatchError& ex) {
    json cells = json::array();
    for (const auto& c : ex.issues()) {
      cells.push_back({{"speed", c.speed}, {"position", c.position + 1}, {"reason", c.reason}});
    }
    return error_response(400, ex.what(), {{"cells", std::move(cells)}});
  } catch (const NotAwaitingError& ex) {
    return error_response(409, ex.what());
  } catch (const AlreadySubmittedError& ex) {
    return error_response(409, ex.what());
  } catch (const QueueClosedError& ex) {
    return error_response(409, ex.what());
  }

  std::unique_lock lock(e->mu);
  const bool journaled = e->cv.wait_for(lock, std::chrono::seconds(30), [&] {
    return e->recorded.count(pending_id) != 0 || e->stopped;
  });
  if (!journaled || e->recorded.count(pending_id) == 0) {
    return error_response(500, "measurement accepted but not journaled");
  }
  return {200, e->recorded.at(pending_id)};
}

ServiceResponse Service::get_archive(const std::string& run_id, std::optional<std::size_t> position) const {
  auto e = impl_->find(run_id);
  if (!e) return error_response(404, "unknown run: " + run_id);
  const RunState state = e->engine->state();
  if (position && (*position < 1 || *position > state.positions.size())) {
    return error_response(404, "unknown position: " + std::to_string(*position));
  }
  json items = json::array();
  for (std::size_t p = 0; p < state.positions.size(); ++p) {
    if (position && p + 1 != *position) continue;
    for (std::size_t idx : state.positions[p].archive) {
      items.push_back(record_to_json(state.records[idx], e->config.space));
    }
  }
  return {200, {{"run_id", e->id}, {"records", std::move(items)}}};
}

ServiceResponse Service::get_surrogate(const std::string& run_id, std::size_t position) const {
  auto e = impl_->find(run_id);
  if (!e) return error_response(404, "unknown run: " + run_id);
  const RunState state = e->engine->state();
  if (position < 1 || position > state.positions.size()) {
    return error_response(404, "unknown position: " + std::to_string(position));
  }
  const auto& ps = state.positions[position - 1];
  json body = {{"run_id", e->id}, {"position", position}, {"available", ps.surrogate.has_value()}};
  if (!ps.surrogate) return {200, std::move(body)};
  const auto& model = *ps.surrogate;
  json pairs = json::array();
  for (std::size_t idx : ps.archive) {
    const auto& r = state.records[idx];
    pairs.push_back({{"record_id", r.record_id},
                     {"measured", r.fitness},
                     {"predicted", model.predict(e->engine->codec().surrogate_input(r.configuration))}});
  }
  body["hidden_units"] = model.hidden_units();
  body["epochs_run"] = model.meta.epochs_run;
  body["final_loss"] = model.meta.final_loss;
  body["loss_curve"] = model.meta.loss_curve;
  body["pairs"] = std::move(pairs);
  return {200, std::move(body)};
}

std::optional<EventBatch> Service::events(const std::string& run_id, std::uint64_t last_seen,
                                          std::chrono::milliseconds wait) const {
  auto e = impl_->find(run_id);
  if (!e) return std::nullopt;
  std::unique_lock lock(e->mu);
  EventBatch batch;
  if (last_seen > e->log.size()) {
    batch.reset = true;
    last_seen = 0;
  }
  e->cv.wait_for(lock, wait, [&] { return e->log.size() > last_seen || e->stopped; });
  batch.events.assign(e->log.begin() + static_cast<std::ptrdiff_t>(last_seen), e->log.end());
  batch.complete = e->stopped;
  return batch;
}

bool Service::wait_stopped(const std::string& run_id, std::chrono::milliseconds timeout) const {
  auto e = impl_->find(run_id);
  if (!e) return false;
  std::unique_lock lock(e->mu);
  return e->cv.wait_for(lock, timeout, [&] { return e->stopped; });
}

int Service::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  svr.new_task_queue = [] { return new httplib::ThreadPool(16); };

  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse_body = [](const httplib::Request& req, json& out) {
    if (req.body.empty()) {
      out = json::object();
      return true;
    }
    out = json::parse(req.body, nullptr, false);
    return !out.is_discarded();
  };

  svr.Post("/api/v1/runs", [this, reply, parse_body](const httplib::Request& req, httplib::Response& res) {
    json body;
    if (!parse_body(req, body)) return reply(res, error_response(400, "body is not valid JSON"));
    reply(res, create_run(body, req.get_header_value("Idempotency-Key")));
  });
  svr.Get(R"(/api/v1/runs/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_run(req.matches[1]));
  });
  svr.Get(R"(/api/v1/runs/([^/]+)/pending)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_pending(req.matches[1]));
  });
  svr.Post(R"(/api/v1/runs/([^/]+)/results)",
           [this, reply, parse_body](const httplib::Request& req, httplib::Response& res) {
             json body;
             if (!parse_body(req, body)) return reply(res, error_response(400, "body is not valid JSON"));
             reply(res, submit_result(req.matches[1], body, req.get_header_value("Idempotency-Key")));
           });
  svr.Get(R"(/api/v1/runs/([^/]+)/archive)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::size_t> position;
    if (req.has_param("position")) {
      try {
        position = std::stoul(req.get_param_value("position"));
      } catch (const std::exception&) {
        return reply(res, error_response(400, "position must be a positive integer"));
      }
    }
    reply(res, get_archive(req.matches[1], position));
  });
  svr.Get(R"(/api/v1/runs/([^/]+)/surrogate/(\d+))",
          [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, get_surrogate(req.matches[1], std::stoul(req.matches[2])));
          });
  svr.Get(R"(/api/v1/runs/([^/]+)/events)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!impl_->find(id)) return reply(res, error_response(404, "unknown run: " + id));
    std::string last = req.get_header_value("Last-Event-ID");
    if (last.empty() && req.has_param("last_event_id")) last = req.get_param_value("last_event_id");
    std::uint64_t cursor = 0;
    try {
      if (!last.empty()) cursor = std::stoull(last);
    } catch (const std::exception&) {
      return reply(res, error_response(400, "Last-Event-ID must be a non-negative integer"));
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) mutable {
      if (impl_->stopping.load()) return false;
      auto batch = events(id, cursor, std::chrono::milliseconds(500));
      if (!batch) return false;
      std::string out;
      if (batch->reset) {
        out += "event: reset\ndata: {}\n\n";
        cursor = 0;
      }
      for (const auto& ev : batch->events) {
        out += "id: " + std::to_string(ev.id) + "\nevent: " + ev.type + "\ndata: " + ev.data.dump() + "\n\n";
        cursor = ev.id;
      }
      if (out.empty()) out = ": keep-alive\n\n";
      if (!sink.write(out.data(), out.size())) return false;
      if (batch->complete && batch->events.empty()) sink.done();
      return true;
    });
  });

  const int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ServiceError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  impl_->stopping = true;
  impl_->server.stop();
}

}  // namespace aeromine
