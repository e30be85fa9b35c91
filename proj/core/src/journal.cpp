#include "aeromine/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aeromine {

using nlohmann::json;

std::string to_string(ProposalSource s) {
  switch (s) {
    case ProposalSource::seed_human: return "seed-human";
    case ProposalSource::seed_random: return "seed-random";
    case ProposalSource::surrogate: return "surrogate";
    case ProposalSource::baseline: return "baseline";
    case ProposalSource::fallback_mutation: return "fallback-mutation";
  }
  return "unknown";
}

std::optional<ProposalSource> parse_proposal_source(const std::string& text) {
  for (auto s : {ProposalSource::seed_human, ProposalSource::seed_random, ProposalSource::surrogate,
                 ProposalSource::baseline, ProposalSource::fallback_mutation}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::string to_string(RunMode mode) { return mode == RunMode::surrogate ? "run" : "baseline"; }

json header_to_json(const JournalHeader& h) {
  return {{"type", "header"},
          {"format", "aeromine-journal"},
          {"version", h.version},
          {"run_id", h.run_id},
          {"mode", to_string(h.mode)},
          {"seed", h.config.seed},
          {"space_hash", space_hash(h.config.space)},
          {"config", to_json(h.config)},
          {"created", h.created},
          {"idempotency_key", h.idempotency_key}};
}

json record_to_json(const EvaluationRecord& r, const DesignSpace& space) {
  return {{"type", "record"},
          {"record_id", r.record_id},
          {"round", r.round},
          {"position", r.position + 1},
          {"slot", r.slot},
          {"source", to_string(r.source)},
          {"configuration", configuration_to_json(r.configuration, space)},
          {"readings", r.readings.rows()},
          {"fitness", r.fitness},
          {"provenance", to_string(r.provenance)},
          {"pending_id", r.pending_id},
          {"idempotency_key", r.idempotency_key},
          {"timestamp", r.timestamp}};
}

EvaluationRecord record_from_json(const json& doc, const DesignSpace& space) {
  EvaluationRecord r;
  r.record_id = doc.at("record_id").get<std::uint64_t>();
  r.round = doc.at("round").get<std::uint64_t>();
  const auto position = doc.at("position").get<std::size_t>();
  if (position < 1) throw std::invalid_argument("position must be >= 1");
  r.position = position - 1;
  r.slot = doc.at("slot").get<std::size_t>();
  auto source = parse_proposal_source(doc.at("source").get<std::string>());
  if (!source) throw std::invalid_argument("unknown source");
  r.source = *source;
  r.configuration = configuration_from_json(doc.at("configuration"), space);
  r.readings = Readings::from_rows(doc.at("readings").get<std::vector<std::vector<double>>>());
  r.fitness = doc.at("fitness").get<double>();
  auto provenance = parse_provenance(doc.at("provenance").get<std::string>());
  if (!provenance) throw std::invalid_argument("unknown provenance");
  r.provenance = *provenance;
  r.pending_id = doc.value("pending_id", "");
  r.idempotency_key = doc.value("idempotency_key", "");
  r.timestamp = doc.value("timestamp", "");
  if (r.readings.speeds() != r.configuration.wind_speeds.size() ||
      r.readings.positions() != r.configuration.positions()) {
    throw std::invalid_argument("readings do not match the configuration");
  }
  if (aggregate_fitness(r.readings) != r.fitness) throw std::invalid_argument("fitness does not match readings");
  return r;
}

namespace {

json pending_to_json(const PendingNote& p, const DesignSpace& space) {
  return {{"type", "pending"},
          {"pending_id", p.pending_id},
          {"round", p.round},
          {"position", p.position + 1},
          {"slot", p.slot},
          {"configuration", configuration_to_json(p.configuration, space)},
          {"timestamp", p.timestamp}};
}

JournalHeader header_from_json(const json& doc) {
  if (doc.value("type", "") != "header" || doc.value("format", "") != "aeromine-journal") {
    throw JournalError("missing header", 1);
  }
  JournalHeader h;
  h.version = doc.at("version").get<int>();
  if (h.version != kJournalVersion) throw JournalError("unsupported version " + std::to_string(h.version), 1);
  h.run_id = doc.value("run_id", "");
  const auto mode = doc.value("mode", "run");
  h.mode = mode == "baseline" ? RunMode::baseline : RunMode::surrogate;
  h.config = parse_run_config(doc.at("config"));
  h.created = doc.value("created", "");
  h.idempotency_key = doc.value("idempotency_key", "");
  if (doc.contains("space_hash") && doc["space_hash"] != space_hash(h.config.space)) {
    throw JournalError("space hash does not match the echoed configuration", 1);
  }
  return h;
}

}  // namespace

void MemoryJournal::append(const EvaluationRecord& record) {
  if (!records_.empty() && record.record_id != records_.back().record_id + 1) throw JournalError("non-contiguous id");
  records_.push_back(record);
}

JournalWriter::JournalWriter(std::string path, int fd, JournalHeader header, std::uint64_t last_id, bool durable)
    : path_(std::move(path)), fd_(fd), header_(std::move(header)), last_id_(last_id), durable_(durable) {}

JournalWriter::JournalWriter(JournalWriter&& o) noexcept
    : path_(std::move(o.path_)), fd_(o.fd_), header_(std::move(o.header_)), last_id_(o.last_id_), durable_(o.durable_) {
  o.fd_ = -1;
}

JournalWriter& JournalWriter::operator=(JournalWriter&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(o.path_);
    fd_ = o.fd_;
    header_ = std::move(o.header_);
    last_id_ = o.last_id_;
    durable_ = o.durable_;
    o.fd_ = -1;
  }
  return *this;
}

JournalWriter::~JournalWriter() {
  if (fd_ >= 0) ::close(fd_);
}

JournalWriter JournalWriter::create(const std::string& path, const JournalHeader& header, bool durable) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw JournalError("cannot create journal '" + path + "': " + std::strerror(errno));
  JournalWriter w(path, fd, header, 0, durable);
  w.write_line(header_to_json(header).dump());
  return w;
}

JournalWriter JournalWriter::open(const std::string& path, bool durable) {
  auto loaded = load_journal(path);
  if (loaded.truncated_tail) {
    // Drop the partial line so the next append starts on a line boundary.
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto keep = text.rfind('\n');
    if (::truncate(path.c_str(), static_cast<off_t>(keep == std::string::npos ? 0 : keep + 1)) != 0) {
      throw JournalError("cannot truncate partial line in '" + path + "'");
    }
  }
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) throw JournalError("cannot open journal '" + path + "': " + std::strerror(errno));
  const std::uint64_t last = loaded.records.empty() ? 0 : loaded.records.back().record_id;
  return JournalWriter(path, fd, std::move(loaded.header), last, durable);
}

void JournalWriter::write_line(const std::string& line) {
  const std::string buf = line + "\n";
  std::size_t off = 0;
  while (off < buf.size()) {
    const auto n = ::write(fd_, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw JournalError("write to '" + path_ + "' failed: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
  if (durable_ && ::fsync(fd_) != 0) throw JournalError("fsync of '" + path_ + "' failed");
}

void JournalWriter::append(const EvaluationRecord& record) {
  if (record.record_id != last_id_ + 1) throw JournalError("non-contiguous id");
  write_line(record_to_json(record, header_.config.space).dump());
  last_id_ = record.record_id;
}

void JournalWriter::note_pending(const PendingNote& note) {
  write_line(pending_to_json(note, header_.config.space).dump());
}

LoadedJournal parse_journal(const std::string& text) {
  LoadedJournal out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
    pos = complete ? nl + 1 : text.size();
    ++line_no;
    if (line.empty() && complete) throw JournalError("empty line", line_no);

    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      if (!complete && have_header) {
        out.truncated_tail = true;
        break;
      }
      if (!have_header) throw JournalError("missing header", line_no);
      throw JournalError("corrupt line", line_no);
    }
    if (!have_header) {
      try {
        out.header = header_from_json(doc);
      } catch (const JournalError&) {
        throw;
      } catch (const std::exception& e) {
        throw JournalError(std::string("bad header: ") + e.what(), line_no);
      }
      have_header = true;
      continue;
    }
    const auto type = doc.value("type", "");
    try {
      if (type == "record") {
        auto r = record_from_json(doc, out.header.config.space);
        const std::uint64_t expected = out.records.empty() ? 1 : out.records.back().record_id + 1;
        if (r.record_id != expected) throw std::invalid_argument("non-contiguous id");
        out.records.push_back(std::move(r));
      } else if (type == "pending") {
        PendingNote p;
        p.pending_id = doc.at("pending_id").get<std::string>();
        p.round = doc.at("round").get<std::uint64_t>();
        p.position = doc.at("position").get<std::size_t>() - 1;
        p.slot = doc.at("slot").get<std::size_t>();
        p.configuration = configuration_from_json(doc.at("configuration"), out.header.config.space);
        p.timestamp = doc.value("timestamp", "");
        out.pending.push_back(std::move(p));
      } else {
        throw std::invalid_argument("unknown line type '" + type + "'");
      }
    } catch (const std::exception& e) {
      if (!complete) {
        out.truncated_tail = true;
        break;
      }
      throw JournalError(std::string("corrupt line: ") + e.what(), line_no);
    }
  }
  if (!have_header) throw JournalError("missing header", 1);
  return out;
}

LoadedJournal load_journal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JournalError("cannot read journal '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_journal(text);
}

std::string canonical_journal(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      continue;
    }
    doc.erase("timestamp");
    doc.erase("created");
    doc.erase("run_id");
    doc.erase("idempotency_key");
    out += doc.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) { return json(v).dump(); }

}  // namespace

std::string export_csv(const LoadedJournal& journal) {
  const auto& config = journal.header.config;
  const auto& space = config.space;
  const std::size_t n = config.positions;
  const std::size_t speeds = config.wind_speeds.size();

  std::ostringstream os;
  os << "record_id,round,position,slot,source,provenance,fitness,spacing";
  for (std::size_t p = 0; p < n; ++p) {
    for (const auto& spec : space.parameters()) os << ",p" << p + 1 << "_" << spec.name;
  }
  for (std::size_t v = 0; v < speeds; ++v) {
    os << ",v" << v + 1 << "_speed";
    for (std::size_t p = 0; p < n; ++p) os << ",v" << v + 1 << "_p" << p + 1 << "_power";
  }
  os << ",pending_id,timestamp\n";
  for (const auto& r : journal.records) {
    os << r.record_id << ',' << r.round << ',' << r.position + 1 << ',' << r.slot << ',' << to_string(r.source) << ','
       << to_string(r.provenance) << ',' << number(r.fitness) << ',' << number(r.configuration.spacing);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t i = 0; i < space.size(); ++i) {
        const double raw = r.configuration.genomes[p].values[i];
        os << ',' << (space[i].kind == ParameterKind::continuous ? number(raw) : csv_field(format_value(space[i], raw)));
      }
    }
    for (std::size_t v = 0; v < speeds; ++v) {
      os << ',' << number(r.configuration.wind_speeds[v]);
      for (std::size_t p = 0; p < n; ++p) os << ',' << number(r.readings.at(v, p));
    }
    os << ',' << csv_field(r.pending_id) << ',' << csv_field(r.timestamp) << '\n';
  }
  return os.str();
}

}  // namespace aeromine
