#pragma once

// Data Summary Agent: synthesizes probe scripts, runs them in the sandbox,
// iterates on tracebacks and distills the results into a DataProfile.

#include <optional>
#include <string>
#include <vector>

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/llm.hpp"
#include "geoflow/profile.hpp"
#include "geoflow/sandbox.hpp"

namespace geoflow {

struct ProbeAttempt {
    int round = 1;
    ToolScript script;
    ExecutionRecord record;
    enum class Outcome { parsed, failed } outcome = Outcome::failed;
    std::string failure;  // traceback excerpt or parse error
};

struct ProbeFailed : GeoflowError {
    ProbeFailed(std::string msg, std::vector<ProbeAttempt> a)
        : GeoflowError(std::move(msg)), attempts(std::move(a)) {}
    std::vector<ProbeAttempt> attempts;
};

struct ProbeResult {
    DataProfile profile;
    std::vector<ProbeAttempt> attempts;
};

inline ToolScript generate_probe_script(const TaskInstruction& task,
                                        const std::vector<fs::path>& data_pointers,
                                        LlmGateway& gateway,
                                        const std::string& prior_feedback = "",
                                        int round = 1) {
    if (data_pointers.empty()) throw ParameterError("probe needs at least one data pointer");
    std::string pointers;
    for (const auto& p : data_pointers) {
        if (!pointers.empty()) pointers += "\n";
        pointers += p.string();
    }
    std::string feedback_section;
    if (!prior_feedback.empty()) {
        feedback_section =
            "\nYour previous probe script failed. Fix the cause of this error:\n" +
            prior_feedback + "\n";
    }
    std::string prompt = gateway.prompts().render(
        "data_probe", json{{"pointers", pointers},
                           {"task_text", task.text},
                           {"feedback_section", feedback_section}});
    ChatResponse resp = gateway.complete(make_request(AgentRole::data_summary, prompt));
    ToolScript script;
    script.node_id = "probe";
    script.round = round;
    script.body = resp.text;
    return script;
}

namespace detail {

inline std::string joined_pointers(const std::vector<fs::path>& pointers) {
    std::string out;
    for (const auto& p : pointers) {
        if (!out.empty()) out += "\n";
        out += p.string();
    }
    return out;
}

}  // namespace detail

// Generate -> execute -> parse loop; each failed round feeds its traceback
// into the next generation. Probe scripts run in the workspace profile
// directory and receive the pointer list via GF_DATA_POINTERS.
inline ProbeResult run_probe_loop(const TaskInstruction& task,
                                  const std::vector<fs::path>& data_pointers,
                                  LlmGateway& gateway, Workspace& ws,
                                  const SandboxConfig& sandbox_base, int max_attempts) {
    if (max_attempts < 1) throw ParameterError("max_attempts must be positive");
    for (const auto& p : data_pointers) {
        if (!fs::exists(p)) throw ParameterError("data pointer missing: " + p.string());
    }

    SandboxConfig cfg = sandbox_base;
    cfg.workdir = ws.profile_dir();
    cfg.workspace_root = ws.root;
    cfg.extra_env["GF_DATA_POINTERS"] = detail::joined_pointers(data_pointers);

    std::vector<ProbeAttempt> attempts;
    std::string feedback;
    for (int round = 1; round <= max_attempts; ++round) {
        ProbeAttempt attempt;
        attempt.round = round;
        attempt.script = generate_probe_script(task, data_pointers, gateway, feedback, round);
        attempt.record = execute_script(attempt.script, cfg);

        std::optional<DataProfile> profile;
        if (!attempt.record.succeeded()) {
            attempt.failure = attempt.record.traceback.value_or(
                "probe exited with status " + std::to_string(attempt.record.exit_status));
        } else {
            fs::path profile_path = ws.profile_dir() / "profile.json";
            std::ifstream in(profile_path);
            if (!in.is_open()) {
                attempt.failure = "probe wrote no profile.json";
            } else {
                try {
                    json j;
                    in >> j;
                    profile = profile_from_json(j);
                    attempt.outcome = ProbeAttempt::Outcome::parsed;
                } catch (const std::exception& e) {
                    attempt.failure = std::string("profile.json invalid: ") + e.what();
                }
            }
        }

        ws.ledger->append(Stage::data_preparation, EventKind::probe_attempt,
                          json{{"round", round},
                               {"outcome", profile ? "parsed" : "failed"},
                               {"exit_status", attempt.record.exit_status},
                               {"failure", attempt.failure}});
        feedback = attempt.failure;
        attempts.push_back(std::move(attempt));
        if (profile) return ProbeResult{std::move(*profile), std::move(attempts)};
    }
    throw ProbeFailed("probe loop failed after " + std::to_string(max_attempts) + " attempts",
                      std::move(attempts));
}

// One LLM call; with the gateway disabled (ablation) a deterministic template
// rendering stands in.
inline std::string distill_profile(const std::vector<DataItem>& items, LlmGateway* gateway) {
    if (items.empty()) throw ParameterError("cannot distill an empty profile");
    if (gateway == nullptr) return render_profile_narrative(items);
    json items_json = json::array();
    for (const auto& item : items) items_json.push_back(to_json(item));
    std::string prompt =
        gateway->prompts().render("profile_distill", json{{"items_json", items_json.dump(2)}});
    ChatResponse resp = gateway->complete(make_request(AgentRole::data_summary, prompt));
    return resp.text;
}

// Ablation substitute (no probing): a profile that knows only the pointers.
inline DataProfile passthrough_profile(const std::vector<fs::path>& data_pointers) {
    DataProfile p;
    for (const auto& ptr : data_pointers) {
        DataItem item;
        item.path = ptr.string();
        item.modality = "unknown";
        p.items.push_back(std::move(item));
    }
    p.narrative = p.items.empty() ? "no data items" : render_profile_narrative(p.items);
    return p;
}

}  // namespace geoflow
