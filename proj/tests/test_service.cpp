#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include <httplib.h>

#include "aeromine/journal.hpp"
#include "aeromine/service.hpp"

using namespace aeromine;
using nlohmann::json;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

json synthetic_body(std::size_t budget = 30) {
  return {{"config", {{"positions", 2}, {"seeds_per_position", 3}}}, {"seed", 4}, {"budget", budget}};
}

json manual_body(std::size_t budget = 10) {
  return {{"config",
           {{"positions", 2}, {"wind_speeds", json::array({4.0, 6.0})}, {"seeds_per_position", 3}, {"seed", 7}}},
          {"oracle", "manual"},
          {"budget", budget}};
}

json readings_for(std::size_t speeds, std::size_t positions, double base) {
  json rows = json::array();
  for (std::size_t s = 0; s < speeds; ++s) {
    json row = json::array();
    for (std::size_t p = 0; p < positions; ++p) row.push_back(base + static_cast<double>(s + p));
    rows.push_back(row);
  }
  return rows;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("aeromine-service-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::vector<json> wait_pending(const Service& svc, const std::string& id, std::size_t at_least = 1) {
    for (int i = 0; i < 2000; ++i) {
      const auto r = svc.get_pending(id);
      if (r.body["pending"].size() >= at_least) return r.body["pending"].get<std::vector<json>>();
      std::this_thread::sleep_for(5ms);
    }
    return {};
  }

  fs::path dir_;
};

}  // namespace

TEST(BindAddress, Forms) {
  EXPECT_EQ(parse_bind_address("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_EQ(parse_bind_address(":8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_bind_address("7000"), (std::pair<std::string, int>{"127.0.0.1", 7000}));
  EXPECT_THROW(parse_bind_address("host:port"), std::invalid_argument);
  EXPECT_THROW(parse_bind_address("host:70000"), std::invalid_argument);
}

TEST_F(ServiceTest, UnwritableDataDirectoryRejected) {
  fs::create_directories(dir_);
  const auto file = dir_ / "plain-file";
  std::ofstream(file) << "x";
  EXPECT_THROW(Service((file / "sub").string()), ServiceError);
}

TEST_F(ServiceTest, SyntheticRunCompletesAndJournals) {
  Service svc(dir_.string(), false);
  const auto created = svc.create_run(synthetic_body());
  ASSERT_EQ(created.status, 201) << created.body.dump();
  const auto id = created.body["run_id"].get<std::string>();
  EXPECT_EQ(id.rfind("run-", 0), 0u);
  ASSERT_TRUE(svc.wait_stopped(id, 60s));

  const auto run = svc.get_run(id);
  ASSERT_EQ(run.status, 200);
  EXPECT_EQ(run.body["status"], "finished");
  EXPECT_EQ(run.body["oracle_calls"], 30);
  EXPECT_EQ(run.body["elites"].size(), 2u);
  EXPECT_TRUE(run.body.contains("best_configuration"));

  const auto journal = load_journal(created.body["journal"].get<std::string>());
  EXPECT_EQ(journal.records.size(), 30u);
  EXPECT_EQ(journal.header.run_id, id);
  EXPECT_EQ(svc.get_archive(id, std::nullopt).body["records"].size(), 30u);
  EXPECT_EQ(svc.get_archive(id, 1).body["records"].size(), 15u);
  EXPECT_EQ(svc.get_archive(id, 3).status, 404);

  const auto model = svc.get_surrogate(id, 1);
  ASSERT_EQ(model.status, 200);
  EXPECT_TRUE(model.body["available"].get<bool>());
  EXPECT_FALSE(model.body["loss_curve"].empty());
  EXPECT_FALSE(model.body["pairs"].empty());
  EXPECT_EQ(svc.get_surrogate(id, 0).status, 404);
}

TEST_F(ServiceTest, CreateRejectsBadRequests) {
  Service svc(dir_.string(), false);
  EXPECT_EQ(svc.create_run(json{{"config", json::object()}, {"colour", 1}}).status, 400);
  EXPECT_EQ(svc.create_run(json::object()).status, 400);
  EXPECT_EQ(svc.create_run(json{{"config", json::object()}, {"mode", "fast"}}).status, 400);
  const auto bad = svc.create_run(json{{"config", {{"positions", 9}, {"budgte", 3}}}});
  ASSERT_EQ(bad.status, 400);
  EXPECT_GE(bad.body["violations"].size(), 2u);
  EXPECT_TRUE(svc.run_ids().empty());
}

TEST_F(ServiceTest, CreateIsIdempotentPerKey) {
  Service svc(dir_.string(), false);
  const auto a = svc.create_run(synthetic_body(), "create-1");
  const auto b = svc.create_run(synthetic_body(), "create-1");
  ASSERT_EQ(a.status, 201);
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(svc.run_ids().size(), 1u);
  const auto c = svc.create_run(synthetic_body(), "create-2");
  EXPECT_NE(c.body["run_id"], a.body["run_id"]);
}

TEST_F(ServiceTest, UnknownRunIs404) {
  Service svc(dir_.string(), false);
  EXPECT_EQ(svc.get_run("run-nope").status, 404);
  EXPECT_EQ(svc.get_pending("run-nope").status, 404);
  EXPECT_EQ(svc.submit_result("run-nope", json{{"pending_id", "x"}}).status, 404);
  EXPECT_EQ(svc.get_archive("run-nope", std::nullopt).status, 404);
  EXPECT_FALSE(svc.events("run-nope", 0, 0ms).has_value());
}

TEST_F(ServiceTest, ManualSubmissionLifecycle) {
  Service svc(dir_.string(), false);
  const auto id = svc.create_run(manual_body()).body["run_id"].get<std::string>();
  const auto pending = wait_pending(svc, id, 3);
  ASSERT_EQ(pending.size(), 3u);
  const auto pid = pending[0]["pending_id"].get<std::string>();
  EXPECT_EQ(pid, "r0-p1-s0");
  EXPECT_EQ(pending[0]["turbines"].size(), 2u);
  EXPECT_EQ(pending[0]["wind_speeds"], json::array({4.0, 6.0}));

  const auto wrong = svc.submit_result(id, {{"pending_id", pid}, {"readings", json::array({{1.0, 2.0}, {3.0}})}});
  ASSERT_EQ(wrong.status, 400);
  ASSERT_EQ(wrong.body["cells"].size(), 1u);
  EXPECT_EQ(wrong.body["cells"][0]["speed"], 1);
  EXPECT_EQ(wrong.body["cells"][0]["position"], 2);

  EXPECT_EQ(svc.submit_result(id, {{"pending_id", "r9-p1-s0"}, {"readings", readings_for(2, 2, 1.0)}}).status, 404);

  const auto ack = svc.submit_result(id, {{"pending_id", pid}, {"readings", readings_for(2, 2, 1.0)}}, "k1");
  ASSERT_EQ(ack.status, 200) << ack.body.dump();
  EXPECT_EQ(ack.body["pending_id"], pid);
  EXPECT_EQ(ack.body["record_id"], 1);
  EXPECT_EQ(ack.body["idempotency_key"], "k1");
  EXPECT_DOUBLE_EQ(ack.body["fitness"].get<double>(), ((1.0 + 2.0) + (2.0 + 3.0)) / 2.0);

  const auto again = svc.submit_result(id, {{"pending_id", pid}, {"readings", readings_for(2, 2, 1.0)}}, "k1");
  EXPECT_EQ(again.status, 200);
  EXPECT_EQ(again.body, ack.body);

  const auto stale = svc.submit_result(id, {{"pending_id", pid}, {"readings", readings_for(2, 2, 9.0)}}, "k2");
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(svc.get_run(id).body["oracle_calls"], 1);
}

TEST_F(ServiceTest, RestartResumesManualRun) {
  std::string id;
  std::vector<json> acks;
  {
    Service svc(dir_.string(), false);
    id = svc.create_run(manual_body(), "create-key").body["run_id"].get<std::string>();
    for (int i = 0; i < 4; ++i) {
      const auto pending = wait_pending(svc, id);
      ASSERT_FALSE(pending.empty());
      const auto pid = pending[0]["pending_id"].get<std::string>();
      acks.push_back(
          svc.submit_result(id, {{"pending_id", pid}, {"readings", readings_for(2, 2, i)}}, "key-" + pid).body);
    }
    EXPECT_EQ(svc.get_run(id).body["oracle_calls"], 4);
  }
  Service svc(dir_.string(), false);
  ASSERT_EQ(svc.run_ids(), std::vector<std::string>{id});
  EXPECT_EQ(svc.get_run(id).body["oracle_calls"], 4);
  const auto pending = wait_pending(svc, id, 2);
  ASSERT_EQ(pending.size(), 2u);
  EXPECT_EQ(pending[0]["pending_id"], "r0-p2-s1");

  const auto replay = svc.submit_result(
      id, {{"pending_id", acks[0]["pending_id"]}, {"readings", readings_for(2, 2, 0)}},
      "key-" + acks[0]["pending_id"].get<std::string>());
  EXPECT_EQ(replay.status, 200);
  EXPECT_EQ(replay.body, acks[0]);

  const auto recreated = svc.create_run(manual_body(), "create-key");
  EXPECT_EQ(recreated.body["run_id"], id);

  for (int i = 0; i < 6; ++i) {
    const auto next = wait_pending(svc, id);
    ASSERT_FALSE(next.empty());
    const auto pid = next[0]["pending_id"].get<std::string>();
    EXPECT_EQ(svc.submit_result(id, {{"pending_id", pid}, {"readings", readings_for(2, 2, 1.0)}}).status, 200);
  }
  ASSERT_TRUE(svc.wait_stopped(id, 30s));
  const auto journal = load_journal((dir_ / (id + ".jsonl")).string());
  EXPECT_EQ(journal.records.size(), 10u);
}

TEST_F(ServiceTest, EventLogReplayAndReset) {
  Service svc(dir_.string(), false);
  const auto id = svc.create_run(synthetic_body(20)).body["run_id"].get<std::string>();
  ASSERT_TRUE(svc.wait_stopped(id, 60s));
  const auto all = svc.events(id, 0, 0ms);
  ASSERT_TRUE(all.has_value());
  EXPECT_FALSE(all->reset);
  EXPECT_TRUE(all->complete);
  std::size_t records = 0;
  for (std::size_t i = 0; i < all->events.size(); ++i) {
    EXPECT_EQ(all->events[i].id, i + 1);
    records += all->events[i].type == "record";
  }
  EXPECT_EQ(records, 20u);
  EXPECT_EQ(all->events.back().type, "stopped");

  const auto tail = svc.events(id, 5, 0ms);
  ASSERT_FALSE(tail->events.empty());
  EXPECT_EQ(tail->events.front().id, 6u);

  const auto reset = svc.events(id, 100000, 0ms);
  EXPECT_TRUE(reset->reset);
  EXPECT_EQ(reset->events.size(), all->events.size());
}

TEST_F(ServiceTest, HttpEndpoints) {
  Service svc(dir_.string(), false);
  const int port = svc.bind("127.0.0.1", 0);
  std::thread server([&] { svc.listen(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(60, 0);

  auto created = cli.Post("/api/v1/runs", {{"Idempotency-Key", "h1"}}, synthetic_body(20).dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  const auto id = json::parse(created->body)["run_id"].get<std::string>();
  ASSERT_TRUE(svc.wait_stopped(id, 60s));

  auto run = cli.Get("/api/v1/runs/" + id);
  ASSERT_TRUE(run);
  EXPECT_EQ(run->status, 200);
  EXPECT_EQ(json::parse(run->body)["oracle_calls"], 20);
  EXPECT_EQ(cli.Get("/api/v1/runs/run-missing")->status, 404);
  EXPECT_EQ(cli.Post("/api/v1/runs", "{nope", "application/json")->status, 400);
  EXPECT_EQ(cli.Get("/api/v1/runs/" + id + "/archive?position=1")->status, 200);
  EXPECT_EQ(cli.Get("/api/v1/runs/" + id + "/archive?position=x")->status, 400);
  EXPECT_EQ(cli.Get("/api/v1/runs/" + id + "/surrogate/2")->status, 200);
  EXPECT_EQ(cli.Get("/api/v1/runs/" + id + "/pending")->status, 200);

  auto stream = cli.Get("/api/v1/runs/" + id + "/events", {{"Last-Event-ID", "3"}});
  ASSERT_TRUE(stream);
  EXPECT_EQ(stream->get_header_value("Content-Type"), "text/event-stream");
  EXPECT_EQ(stream->body.find("id: 3\n"), std::string::npos);
  EXPECT_EQ(stream->body.rfind("id: 4\n", 0), 0u);
  EXPECT_NE(stream->body.find("event: stopped"), std::string::npos);

  auto from_query = cli.Get("/api/v1/runs/" + id + "/events?last_event_id=0");
  ASSERT_TRUE(from_query);
  EXPECT_EQ(from_query->body.rfind("id: 1\n", 0), 0u);
  EXPECT_EQ(cli.Get("/api/v1/runs/" + id + "/events", {{"Last-Event-ID", "abc"}})->status, 400);

  svc.stop();
  server.join();
}

TEST_F(ServiceTest, HttpManualSubmission) {
  Service svc(dir_.string(), false);
  const int port = svc.bind("127.0.0.1", 0);
  std::thread server([&] { svc.listen(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(60, 0);

  const auto id =
      json::parse(cli.Post("/api/v1/runs", manual_body().dump(), "application/json")->body)["run_id"].get<std::string>();
  const auto pending = wait_pending(svc, id);
  ASSERT_FALSE(pending.empty());
  const auto pid = pending[0]["pending_id"].get<std::string>();

  const json bad = {{"pending_id", pid}, {"readings", json::array({{1.0}, {2.0, std::string("x")}})}};
  EXPECT_EQ(cli.Post("/api/v1/runs/" + id + "/results", bad.dump(), "application/json")->status, 400);

  const json body = {{"pending_id", pid}, {"readings", readings_for(2, 2, 2.0)}};
  auto ok = cli.Post("/api/v1/runs/" + id + "/results", {{"Idempotency-Key", "s1"}}, body.dump(), "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  auto dup = cli.Post("/api/v1/runs/" + id + "/results", {{"Idempotency-Key", "s1"}}, body.dump(), "application/json");
  EXPECT_EQ(dup->status, 200);
  EXPECT_EQ(dup->body, ok->body);
  auto stale = cli.Post("/api/v1/runs/" + id + "/results", {{"Idempotency-Key", "s2"}}, body.dump(), "application/json");
  EXPECT_EQ(stale->status, 409);

  svc.stop();
  server.join();
}
