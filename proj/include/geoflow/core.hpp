#pragma once

// Shared domain types, workspace layout and the append-only run ledger.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/errors.hpp"

namespace geoflow {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Stages

enum class Stage { data_preparation, feature_extraction, geospatial_analysis };

inline const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> s = {Stage::data_preparation, Stage::feature_extraction,
                                         Stage::geospatial_analysis};
    return s;
}

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::data_preparation: return "data_preparation";
        case Stage::feature_extraction: return "feature_extraction";
        case Stage::geospatial_analysis: return "geospatial_analysis";
    }
    return "data_preparation";
}

inline Stage stage_from_string(const std::string& s) {
    if (s == "data_preparation") return Stage::data_preparation;
    if (s == "feature_extraction") return Stage::feature_extraction;
    if (s == "geospatial_analysis") return Stage::geospatial_analysis;
    throw ParseError("unknown stage: " + s);
}

// Scope of a task: one stage in isolation, or the whole pipeline.
enum class StageScope { data_preparation, feature_extraction, geospatial_analysis, full_pipeline };

inline std::string to_string(StageScope s) {
    switch (s) {
        case StageScope::data_preparation: return "data_preparation";
        case StageScope::feature_extraction: return "feature_extraction";
        case StageScope::geospatial_analysis: return "geospatial_analysis";
        case StageScope::full_pipeline: return "full_pipeline";
    }
    return "full_pipeline";
}

inline StageScope stage_scope_from_string(const std::string& s) {
    if (s == "full_pipeline") return StageScope::full_pipeline;
    switch (stage_from_string(s)) {
        case Stage::data_preparation: return StageScope::data_preparation;
        case Stage::feature_extraction: return StageScope::feature_extraction;
        case Stage::geospatial_analysis: return StageScope::geospatial_analysis;
    }
    return StageScope::full_pipeline;
}

// First stage covered by a scope; workflow-level ledger events are attributed to it.
inline Stage first_stage(StageScope scope) {
    switch (scope) {
        case StageScope::feature_extraction: return Stage::feature_extraction;
        case StageScope::geospatial_analysis: return Stage::geospatial_analysis;
        default: return Stage::data_preparation;
    }
}

// ---------------------------------------------------------------------------
// Task

struct TaskInstruction {
    std::string id;
    std::string text;
    std::string domain_hint;  // urban/agriculture/... or free text; may be empty
    StageScope stage_scope = StageScope::full_pipeline;
};

inline void validate(const TaskInstruction& t) {
    if (t.text.empty()) throw ParameterError("task text must be non-empty");
    if (t.id.empty()) throw ParameterError("task id must be non-empty");
}

inline json to_json(const TaskInstruction& t) {
    return json{{"id", t.id},
                {"text", t.text},
                {"domain_hint", t.domain_hint},
                {"stage_scope", to_string(t.stage_scope)}};
}

inline TaskInstruction task_from_json(const json& j) {
    TaskInstruction t;
    t.id = j.at("id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.domain_hint = j.value("domain_hint", "");
    t.stage_scope = stage_scope_from_string(j.value("stage_scope", "full_pipeline"));
    validate(t);
    return t;
}

// ---------------------------------------------------------------------------
// Timestamps

inline std::int64_t mono_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

inline std::string rfc3339_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto secs = time_point_cast<seconds>(now);
    const auto millis = duration_cast<milliseconds>(now - secs).count();
    std::time_t tt = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(millis));
    return buf;
}

// ---------------------------------------------------------------------------
// Ledger

enum class EventKind {
    probe_attempt,
    plan_candidate,
    plan_selected,
    node_started,
    tool_created,
    execution,
    validation,
    revision,
    stage_done,
    llm_call,
    llm_usage,
};

inline std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::probe_attempt: return "probe_attempt";
        case EventKind::plan_candidate: return "plan_candidate";
        case EventKind::plan_selected: return "plan_selected";
        case EventKind::node_started: return "node_started";
        case EventKind::tool_created: return "tool_created";
        case EventKind::execution: return "execution";
        case EventKind::validation: return "validation";
        case EventKind::revision: return "revision";
        case EventKind::stage_done: return "stage_done";
        case EventKind::llm_call: return "llm_call";
        case EventKind::llm_usage: return "llm_usage";
    }
    return "execution";
}

inline EventKind event_kind_from_string(const std::string& s) {
    static const std::map<std::string, EventKind> lut = {
        {"probe_attempt", EventKind::probe_attempt},
        {"plan_candidate", EventKind::plan_candidate},
        {"plan_selected", EventKind::plan_selected},
        {"node_started", EventKind::node_started},
        {"tool_created", EventKind::tool_created},
        {"execution", EventKind::execution},
        {"validation", EventKind::validation},
        {"revision", EventKind::revision},
        {"stage_done", EventKind::stage_done},
        {"llm_call", EventKind::llm_call},
        {"llm_usage", EventKind::llm_usage},
    };
    auto it = lut.find(s);
    if (it == lut.end()) throw ParseError("unknown event kind: " + s);
    return it->second;
}

struct LedgerEvent {
    std::uint64_t seq = 0;
    std::string ts_wall;
    std::int64_t ts_mono_ns = 0;
    std::string run_id;
    Stage stage = Stage::data_preparation;
    EventKind kind = EventKind::execution;
    json payload = json::object();
};

inline std::string ledger_line(const LedgerEvent& ev) {
    json j{{"seq", ev.seq},         {"ts_wall", ev.ts_wall}, {"ts_mono_ns", ev.ts_mono_ns},
           {"stage", to_string(ev.stage)}, {"kind", to_string(ev.kind)}, {"payload", ev.payload}};
    return j.dump();
}

inline LedgerEvent ledger_event_from_line(const std::string& line) {
    json j = json::parse(line);
    LedgerEvent ev;
    ev.seq = j.at("seq").get<std::uint64_t>();
    ev.ts_wall = j.at("ts_wall").get<std::string>();
    ev.ts_mono_ns = j.at("ts_mono_ns").get<std::int64_t>();
    ev.stage = stage_from_string(j.at("stage").get<std::string>());
    ev.kind = event_kind_from_string(j.at("kind").get<std::string>());
    ev.payload = j.at("payload");
    return ev;
}

struct LedgerLoad {
    std::vector<LedgerEvent> events;
    int warnings = 0;  // torn trailing lines dropped
};

// Missing file yields an empty load. A malformed trailing line (torn write) is
// dropped and counted; a malformed line anywhere else is corruption.
inline LedgerLoad load_ledger_file(const fs::path& path, const std::string& run_id = "") {
    LedgerLoad out;
    std::ifstream in(path);
    if (!in.is_open()) return out;
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            LedgerEvent ev = ledger_event_from_line(lines[i]);
            ev.run_id = run_id;
            out.events.push_back(std::move(ev));
        } catch (const std::exception&) {
            if (i + 1 == lines.size()) {
                out.warnings += 1;
            } else {
                throw CorruptLedger("corrupt ledger: bad record at line " + std::to_string(i + 1));
            }
        }
    }
    return out;
}

// Append-only JSONL writer. Appends are serialized through one writer and made
// durable (fsync) before the sequence number is returned.
class Ledger {
public:
    explicit Ledger(fs::path path, std::string run_id = "")
        : path_(std::move(path)), run_id_(std::move(run_id)) {
        LedgerLoad existing = load_ledger_file(path_, run_id_);
        for (const auto& ev : existing.events) next_seq_ = std::max(next_seq_, ev.seq + 1);
        fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd_ < 0) throw WorkspaceError("cannot open ledger: " + path_.string());
    }

    ~Ledger() {
        if (fd_ >= 0) ::close(fd_);
    }

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    std::uint64_t append(Stage stage, EventKind kind, json payload) {
        LedgerEvent ev;
        ev.stage = stage;
        ev.kind = kind;
        ev.payload = std::move(payload);
        return append(ev);
    }

    std::uint64_t append(LedgerEvent& ev) {
        std::lock_guard<std::mutex> lock(mu_);
        ev.seq = next_seq_++;
        ev.ts_wall = rfc3339_now();
        ev.ts_mono_ns = mono_ns();
        ev.run_id = run_id_;
        std::string line = ledger_line(ev) + "\n";
        const char* p = line.data();
        std::size_t left = line.size();
        while (left > 0) {
            ssize_t n = ::write(fd_, p, left);
            if (n < 0) throw WorkspaceError("ledger write failed: " + path_.string());
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0) throw WorkspaceError("ledger fsync failed: " + path_.string());
        return ev.seq;
    }

    LedgerLoad load() const { return load_ledger_file(path_, run_id_); }

    const fs::path& path() const { return path_; }
    const std::string& run_id() const { return run_id_; }

private:
    fs::path path_;
    std::string run_id_;
    int fd_ = -1;
    std::uint64_t next_seq_ = 1;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Workspace

// Directory layout: runs/<run_id>/{ledger.jsonl, profile/, nodes/<node_id>/}
struct Workspace {
    fs::path root;
    std::string run_id;
    std::map<std::string, fs::path> node_dirs;
    std::shared_ptr<Ledger> ledger;
    std::shared_ptr<std::mutex> node_mu = std::make_shared<std::mutex>();

    fs::path ledger_path() const { return root / "ledger.jsonl"; }
    fs::path profile_dir() const { return root / "profile"; }
    fs::path nodes_dir() const { return root / "nodes"; }

    // Creates (and registers) the node directory on first use.
    fs::path node_dir(const std::string& node_id) {
        std::lock_guard<std::mutex> lock(*node_mu);
        auto it = node_dirs.find(node_id);
        if (it != node_dirs.end()) return it->second;
        if (node_id.empty() || node_id.find("..") != std::string::npos ||
            node_id.find('/') != std::string::npos) {
            throw ParameterError("invalid node id: " + node_id);
        }
        fs::path dir = nodes_dir() / node_id;
        fs::create_directories(dir);
        node_dirs.emplace(node_id, dir);
        return dir;
    }

    // Path made relative to the workspace root when possible (ledger payloads
    // must stay stable across runs).
    std::string rel(const fs::path& p) const {
        std::error_code ec;
        fs::path r = fs::relative(p, root, ec);
        if (ec || r.empty() || r.native().rfind("..", 0) == 0) return p.string();
        return r.string();
    }
};

inline Workspace create_workspace(const std::string& run_id, const fs::path& base) {
    if (run_id.empty() || run_id.find('/') != std::string::npos ||
        run_id.find("..") != std::string::npos) {
        throw ParameterError("invalid run id: " + run_id);
    }
    fs::path root = base / "runs" / run_id;
    if (fs::exists(root)) throw WorkspaceError("run exists: " + run_id);
    std::error_code ec;
    fs::create_directories(root / "nodes", ec);
    if (ec) throw WorkspaceError("cannot create workspace: " + ec.message());
    fs::create_directories(root / "profile", ec);
    if (ec) throw WorkspaceError("cannot create workspace: " + ec.message());
    Workspace ws;
    ws.root = root;
    ws.run_id = run_id;
    ws.ledger = std::make_shared<Ledger>(ws.ledger_path(), run_id);
    return ws;
}

// Reattach to an existing run directory (inspection, ledger reload).
inline Workspace open_workspace(const fs::path& base, const std::string& run_id) {
    fs::path root = base / "runs" / run_id;
    if (!fs::exists(root)) throw WorkspaceError("no such run: " + run_id);
    Workspace ws;
    ws.root = root;
    ws.run_id = run_id;
    ws.ledger = std::make_shared<Ledger>(ws.ledger_path(), run_id);
    if (fs::exists(ws.nodes_dir())) {
        for (const auto& e : fs::directory_iterator(ws.nodes_dir())) {
            if (e.is_directory()) ws.node_dirs.emplace(e.path().filename().string(), e.path());
        }
    }
    return ws;
}

inline std::uint64_t append_event(Workspace& ws, LedgerEvent& ev) { return ws.ledger->append(ev); }

inline LedgerLoad load_ledger(const Workspace& ws) {
    return load_ledger_file(ws.ledger_path(), ws.run_id);
}

}  // namespace geoflow
