#include "cli.hpp"

#include <pthread.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aeromine/brute_force.hpp"
#include "aeromine/config.hpp"
#include "aeromine/engine.hpp"
#include "aeromine/journal.hpp"
#include "aeromine/manual_queue.hpp"
#include "aeromine/oracle.hpp"
#include "aeromine/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aeromine::cli {

namespace {

// One-line failure carrying its exit code.
struct Failure {
  int code;
  json line;
};

Failure failure(int code, const std::string& kind, const std::string& message) {
  return {code, {{"error", kind}, {"message", message}}};
}

struct RunFlags {
  std::string config;
  std::string oracle;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::string journal;
  bool resume = false;
};

RunConfig load_with_overrides(const RunFlags& f) {
  std::ifstream in(f.config);
  if (!in) throw ConfigError({"cannot read config file '" + f.config + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"config: expected an object"});
  if (!f.oracle.empty()) {
    if (!doc.contains("oracle") || !doc["oracle"].is_object()) doc["oracle"] = json::object();
    doc["oracle"]["kind"] = f.oracle;
  }
  if (f.seed) doc["seed"] = *f.seed;
  if (f.budget) doc["budget"] = *f.budget;
  return parse_run_config(doc);
}

std::string new_run_id() {
  std::mt19937_64 gen{std::random_device{}()};
  std::ostringstream os;
  os << "cli-" << std::hex << std::setw(12) << std::setfill('0') << (gen() & 0xffffffffffffULL);
  return os.str();
}

std::string default_journal(const RunFlags& f, const RunConfig& c, RunMode mode) {
  return fs::path(f.config).stem().string() + "-seed" + std::to_string(c.seed) + "-" + to_string(mode) + ".jsonl";
}

void print_design(std::ostream& out, const ArrayConfiguration& config, const DesignSpace& space) {
  for (std::size_t p = 0; p < config.genomes.size(); ++p) {
    out << "position " << p + 1 << ":";
    for (std::size_t i = 0; i < space.parameters().size(); ++i) {
      const auto& spec = space.parameters()[i];
      out << " " << spec.name << "=" << format_value(spec, config.genomes[p].values[i]);
    }
    out << "\n";
  }
  if (config.genomes.size() > 1) out << "spacing " << config.spacing << "\n";
}

void print_summary(std::ostream& out, const std::string& run_id, const RunResult& r, const RunConfig& c,
                   const std::string& journal) {
  out << "run " << run_id << "\n";
  out << "status " << to_string(r.status) << "\n";
  out << "oracle_calls " << r.oracle_calls << "\n";
  out << "rounds " << r.rounds << "\n";
  if (r.oracle_calls > 0) {
    out << "best_fitness " << std::setprecision(10) << r.best_fitness << "\n";
    print_design(out, r.best_configuration, c.space);
  }
  out << "journal " << journal << "\n";
}

// Prints each awaiting evaluation and reads its readings matrix, one JSON line per submission.
bool feed_manual(ManualQueue& queue, const Engine& engine, std::istream& in, std::ostream& out, std::ostream& err) {
  std::set<std::string> shown;
  for (;;) {
    const auto status = engine.state().status;
    if (status == RunStatus::finished || status == RunStatus::cancelled) return true;
    std::optional<PendingEvaluation> next;
    for (const auto& p : queue.snapshot()) {
      if (p.status == PendingStatus::awaiting) {
        next = p;
        break;
      }
    }
    if (!next) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      continue;
    }
    if (shown.insert(next->pending_id).second) {
      out << "pending " << next->pending_id << " wind_speeds";
      for (double v : next->configuration.wind_speeds) out << " " << v;
      out << "\n";
      print_design(out, next->configuration, engine.config().space);
      out << "enter readings as [[speed1 powers...], ...]\n" << std::flush;
    }
    std::string line;
    if (!std::getline(in, line)) return false;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json doc = json::parse(line);
      queue.submit(next->pending_id, doc.get<std::vector<std::vector<double>>>());
      shown.erase(next->pending_id);
    } catch (const DimensionMismatchError& e) {
      json cells = json::array();
      for (const auto& c : e.issues()) {
        cells.push_back({{"speed", c.speed}, {"position", c.position + 1}, {"reason", c.reason}});
      }
      err << json{{"error", "readings"}, {"message", e.what()}, {"cells", cells}}.dump() << "\n";
    } catch (const std::exception& e) {
      err << json{{"error", "readings"}, {"message", e.what()}}.dump() << "\n";
    }
  }
}

int do_run(const RunFlags& f, RunMode mode, std::istream& in, std::ostream& out, std::ostream& err) {
  const RunConfig config = load_with_overrides(f);
  const std::string path = f.journal.empty() ? default_journal(f, config, mode) : f.journal;

  std::vector<EvaluationRecord> records;
  std::optional<JournalWriter> writer;
  std::string run_id;
  if (fs::exists(path)) {
    if (!f.resume) throw failure(1, "journal", "journal exists: " + path + " (use --resume)");
    auto loaded = load_journal(path);
    if (to_json(loaded.header.config) != to_json(config) || loaded.header.mode != mode) {
      throw failure(1, "journal", "journal " + path + " was written by a different configuration");
    }
    records = std::move(loaded.records);
    run_id = loaded.header.run_id;
    writer.emplace(JournalWriter::open(path));
  } else {
    JournalHeader header;
    header.run_id = new_run_id();
    header.mode = mode;
    header.config = config;
    header.created = utc_timestamp();
    run_id = header.run_id;
    writer.emplace(JournalWriter::create(path, header));
  }

  RunResult result;
  if (config.oracle == OracleKind::manual) {
    ManualQueue queue;
    ManualOracle oracle(queue);
    Engine engine(config, mode, oracle, std::move(records), &*writer);
    std::thread worker([&] { engine.run(); });
    const bool complete = feed_manual(queue, engine, in, out, err);
    if (!complete) {
      engine.cancel();
      queue.close();
    }
    worker.join();
    result = engine.result();
    print_summary(out, run_id, result, config, path);
    if (!complete) throw failure(1, "input", "input ended before the run finished; resume with --resume");
  } else {
    SyntheticOracle oracle(config.space, config.constants);
    Engine engine(config, mode, oracle, std::move(records), &*writer);
    result = engine.run();
    print_summary(out, run_id, result, config, path);
  }
  return 0;
}

int do_serve(std::string bind, std::string data) {
  if (data.empty()) {
    if (const char* env = std::getenv("AEROMINE_DATA_DIR")) data = env;
  }
  if (data.empty()) throw failure(2, "flags", "--data is required (or set AEROMINE_DATA_DIR)");
  const auto [host, port] = parse_bind_address(bind);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(data);
  const int bound = service.bind(host, port);
  std::cout << "listening " << host << ":" << bound << " data " << data << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int do_bruteforce(const RunFlags& f, std::size_t resolution, std::ostream& out) {
  const RunConfig config = load_with_overrides(f);
  const auto r = brute_force_optimum(config.space, config.positions, config.layout, config.wind_speeds,
                                     config.constants, resolution);
  out << "optimum " << std::setprecision(10) << r.fitness << "\n";
  out << "points " << r.points << "\n";
  print_design(out, r.configuration, config.space);
  return 0;
}

int do_export(const std::string& journal, const std::string& out_path, std::ostream& out) {
  const auto loaded = load_journal(journal);
  std::ofstream file(out_path);
  if (!file) throw failure(1, "io", "cannot write " + out_path);
  file << export_csv(loaded);
  if (!file.flush()) throw failure(1, "io", "cannot write " + out_path);
  out << "exported " << loaded.records.size() << " records to " << out_path << "\n";
  if (loaded.truncated_tail) out << "warning: discarded a partial final line\n";
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw failure(1, "io", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int do_compare(const std::string& a, const std::string& b, std::optional<double> target, double fraction,
               bool canonical, std::ostream& out) {
  if (canonical) {
    const bool same = canonical_journal(read_file(a)) == canonical_journal(read_file(b));
    out << (same ? "identical" : "different") << "\n";
    return same ? 0 : 1;
  }
  const auto ja = load_journal(a);
  const auto jb = load_journal(b);
  auto best = [](const LoadedJournal& j) {
    std::optional<double> m;
    for (const auto& r : j.records) m = m ? std::max(*m, r.fitness) : r.fitness;
    return m;
  };
  const auto ba = best(ja);
  const auto bb = best(jb);
  if (!target) {
    if (!ba && !bb) throw failure(1, "journal", "both journals are empty");
    target = fraction * std::max(ba.value_or(*bb), bb.value_or(*ba));
  }
  const auto ca = evaluations_to_reach(ja.records, *target);
  const auto cb = evaluations_to_reach(jb.records, *target);
  auto show = [&](const char* label, const std::string& path, const LoadedJournal& j,
                  const std::optional<std::size_t>& calls) {
    out << label << " " << path << " mode " << to_string(j.header.mode) << " records " << j.records.size()
        << " calls_to_target " << (calls ? std::to_string(*calls) : "never") << "\n";
  };
  out << "target " << std::setprecision(10) << *target << "\n";
  show("a", a, ja, ca);
  show("b", b, jb, cb);
  if (ca && cb) out << "ratio " << static_cast<double>(*ca) / static_cast<double>(*cb) << "\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surrogate-assisted design mining for turbine arrays", "aeromine"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Mine designs with per-position surrogates");
  run->add_option("--config", run_flags.config, "Run configuration file")->required();
  run->add_option("--oracle", run_flags.oracle, "Override the oracle")->check(CLI::IsMember({"synthetic", "manual"}));
  run->add_option("--seed", run_flags.seed, "Override the seed");
  run->add_option("--budget", run_flags.budget, "Override the oracle-call budget");
  run->add_option("--journal", run_flags.journal, "Journal path");
  run->add_flag("--resume", run_flags.resume, "Continue an existing journal");

  RunFlags base_flags;
  auto* baseline = app.add_subcommand("baseline", "Evolve with every offspring sent to the oracle");
  baseline->add_option("--config", base_flags.config, "Run configuration file")->required();
  baseline->add_option("--oracle", base_flags.oracle, "Override the oracle")
      ->check(CLI::IsMember({"synthetic", "manual"}));
  baseline->add_option("--seed", base_flags.seed, "Override the seed");
  baseline->add_option("--budget", base_flags.budget, "Override the oracle-call budget");
  baseline->add_option("--journal", base_flags.journal, "Journal path");
  baseline->add_flag("--resume", base_flags.resume, "Continue an existing journal");

  std::string bind = "127.0.0.1:8080";
  std::string data;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--data", data, "Data directory (default $AEROMINE_DATA_DIR)");

  RunFlags bf_flags;
  std::size_t resolution = 21;
  auto* bruteforce = app.add_subcommand("bruteforce", "Exhaustive grid search of the synthetic oracle");
  bruteforce->add_option("--config", bf_flags.config, "Run configuration file")->required();
  bruteforce->add_option("--resolution", resolution, "Grid points per parameter")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
      ->capture_default_str();

  std::string journal;
  std::string out_path;
  auto* exporter = app.add_subcommand("export", "Write a journal as CSV");
  exporter->add_option("--journal", journal, "Journal file")->required();
  exporter->add_option("--out", out_path, "CSV path")->required();

  std::string ja;
  std::string jb;
  std::optional<double> target;
  double fraction = 0.95;
  bool canonical = false;
  auto* compare = app.add_subcommand("compare", "Oracle calls each journal needed to reach a target");
  compare->add_option("--a", ja, "First journal")->required();
  compare->add_option("--b", jb, "Second journal")->required();
  compare->add_option("--target", target, "Absolute fitness target");
  compare->add_option("--fraction", fraction, "Target as a fraction of the better best fitness")
      ->capture_default_str();
  compare->add_flag("--canonical", canonical, "Check the journals are identical up to timestamps and ids");

  std::vector<const char*> argv{"aeromine"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "flags"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (*run) return do_run(run_flags, RunMode::surrogate, in, out, err);
    if (*baseline) return do_run(base_flags, RunMode::baseline, in, out, err);
    if (*serve) return do_serve(bind, data);
    if (*bruteforce) return do_bruteforce(bf_flags, resolution, out);
    if (*exporter) return do_export(journal, out_path, out);
    if (*compare) return do_compare(ja, jb, target, fraction, canonical, out);
  } catch (const Failure& f) {
    err << f.line.dump() << "\n";
    return f.code;
  } catch (const ConfigError& e) {
    err << json{{"error", "config"}, {"violations", e.violations()}}.dump() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << json{{"error", "flags"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace aeromine::cli
