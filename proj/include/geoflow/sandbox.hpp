#pragma once

// Child-process sandbox for synthesized tools: cwd-contained execution with an
// env allowlist, stream capture, process-tree kill on timeout, and manifest
// pickup. Script failures are data (exit status), not exceptions.

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/validation.hpp"

extern char** environ;

namespace geoflow {

// A synthesized tool: the script body for one node at revision round k.
struct ToolScript {
    std::string node_id;
    int round = 1;
    std::string body;
    std::string interpreter = "python3";
    std::vector<std::string> references;  // catalog entry ids used as context
};

inline void validate(const ToolScript& s) {
    if (s.body.empty()) throw ParameterError("tool script body must be non-empty");
    if (s.round < 1) throw ParameterError("tool script round must be 1-based");
}

// Outcome of one sandboxed run.
struct ExecutionRecord {
    std::string node_id;
    int round = 1;
    int exit_status = 0;
    std::string stdout_tail;  // last 16 KiB
    std::string stderr_tail;
    std::optional<std::string> traceback;
    std::chrono::milliseconds wall_time{0};
    std::optional<ArtifactManifest> manifest;
    bool timed_out = false;

    bool succeeded() const { return exit_status == 0 && !timed_out; }
};

inline json to_json(const ExecutionRecord& r) {
    return json{{"node_id", r.node_id},
                {"round", r.round},
                {"exit_status", r.exit_status},
                {"timed_out", r.timed_out},
                {"wall_time_ms", r.wall_time.count()},
                {"has_manifest", r.manifest.has_value()},
                {"stderr_tail_chars", r.stderr_tail.size()}};
}

struct SandboxConfig {
    std::string interpreter = "python3";
    std::chrono::milliseconds timeout{300000};
    std::vector<std::string> env_allowlist = {"PATH", "HOME", "LANG", "LC_ALL", "PYTHONHASHSEED"};
    fs::path workdir;
    fs::path workspace_root;
    std::map<std::string, std::string> extra_env;  // GF_* contract variables
};

namespace detail {

constexpr std::size_t kTailBytes = 16 * 1024;

inline std::string read_tail(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) return {};
    in.seekg(0, std::ios::end);
    auto size = static_cast<std::size_t>(in.tellg());
    std::size_t want = std::min(size, kTailBytes);
    in.seekg(static_cast<std::streamoff>(size - want));
    std::string out(want, '\0');
    in.read(out.data(), static_cast<std::streamsize>(want));
    return out;
}

inline std::vector<std::string> split_command(const std::string& cmd) {
    std::istringstream in(cmd);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline bool on_path(const std::string& exe) {
    if (exe.find('/') != std::string::npos) return ::access(exe.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::istringstream in(path);
    std::string dir;
    while (std::getline(in, dir, ':')) {
        if (dir.empty()) continue;
        if (::access((fs::path(dir) / exe).c_str(), X_OK) == 0) return true;
    }
    return false;
}

// Python-style traceback if present, else the whole stderr tail on failure.
inline std::optional<std::string> extract_traceback(const std::string& stderr_tail,
                                                    int exit_status) {
    auto pos = stderr_tail.rfind("Traceback (most recent call last):");
    if (pos != std::string::npos) return stderr_tail.substr(pos);
    if (exit_status != 0 && !stderr_tail.empty()) return stderr_tail;
    return std::nullopt;
}

}  // namespace detail

// Writes the body to tool_r<round> in the workdir and runs
// `<interpreter> tool_r<round>` with cwd = workdir and a filtered environment.
// The child gets its own process group; on timeout the whole group is killed.
inline ExecutionRecord execute_script(const ToolScript& script, const SandboxConfig& cfg) {
    validate(script);
    if (cfg.workdir.empty() || !fs::exists(cfg.workdir))
        throw SandboxMisconfigured("sandbox workdir missing: " + cfg.workdir.string());
    if (cfg.timeout.count() <= 0) throw SandboxMisconfigured("sandbox timeout must be positive");

    const std::string interp = script.interpreter.empty() ? cfg.interpreter : script.interpreter;
    std::vector<std::string> argv_strs = detail::split_command(interp);
    if (argv_strs.empty()) throw SandboxMisconfigured("empty interpreter command");
    if (!detail::on_path(argv_strs[0]))
        throw SandboxMisconfigured("interpreter not found: " + argv_strs[0]);

    const std::string tool_name = "tool_r" + std::to_string(script.round);
    {
        std::ofstream out(cfg.workdir / tool_name, std::ios::binary);
        out << script.body;
    }
    argv_strs.push_back(tool_name);

    // A stale manifest from an earlier round must not leak into this one.
    std::error_code ec;
    fs::remove(cfg.workdir / "manifest.json", ec);

    const fs::path stdout_log = cfg.workdir / ("stdout.r" + std::to_string(script.round) + ".log");
    const fs::path stderr_log = cfg.workdir / ("stderr.r" + std::to_string(script.round) + ".log");

    std::vector<std::string> env_strs;
    for (const auto& name : cfg.env_allowlist) {
        const char* v = std::getenv(name.c_str());
        if (v) env_strs.push_back(name + "=" + v);
    }
    env_strs.push_back("WORKSPACE=" + cfg.workspace_root.string());
    env_strs.push_back("GF_NODE_ID=" + script.node_id);
    for (const auto& [k, v] : cfg.extra_env) env_strs.push_back(k + "=" + v);

    std::vector<char*> argv;
    for (auto& s : argv_strs) argv.push_back(s.data());
    argv.push_back(nullptr);
    std::vector<char*> envp;
    for (auto& s : env_strs) envp.push_back(s.data());
    envp.push_back(nullptr);

    const auto started = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) throw SandboxMisconfigured("fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(cfg.workdir.c_str()) != 0) ::_exit(126);
        int out_fd = ::open(stdout_log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        int err_fd = ::open(stderr_log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (out_fd >= 0) ::dup2(out_fd, STDOUT_FILENO);
        if (err_fd >= 0) ::dup2(err_fd, STDERR_FILENO);
        ::execvpe(argv[0], argv.data(), envp.data());
        ::_exit(127);
    }

    ExecutionRecord record;
    record.node_id = script.node_id;
    record.round = script.round;

    const auto deadline = started + cfg.timeout;
    int status = 0;
    bool reaped = false;
    while (!reaped) {
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            reaped = true;
            break;
        }
        if (r < 0) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            record.timed_out = true;
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            reaped = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    record.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (WIFEXITED(status)) {
        record.exit_status = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        record.exit_status = 128 + WTERMSIG(status);
    } else {
        record.exit_status = -1;
    }
    if (record.timed_out && record.exit_status == 0) record.exit_status = 128 + SIGKILL;

    record.stdout_tail = detail::read_tail(stdout_log);
    record.stderr_tail = detail::read_tail(stderr_log);
    record.traceback = detail::extract_traceback(record.stderr_tail, record.exit_status);
    if (record.succeeded()) record.manifest = load_manifest(cfg.workdir);
    return record;
}

}  // namespace geoflow
