#pragma once

// Coding Agent plus the per-node closed loop: synthesize, execute in the
// sandbox, check deterministically, revise on feedback, bounded by max_rounds;
// and the sequential (optionally parallel) workflow runner.

#include <chrono>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/llm.hpp"
#include "geoflow/planner.hpp"
#include "geoflow/profile.hpp"
#include "geoflow/retrieval.hpp"
#include "geoflow/sandbox.hpp"
#include "geoflow/validation.hpp"

namespace geoflow {

// Feedback driving the next revision.
struct DiagnosticFeedback {
    std::string node_id;
    int round = 1;
    enum class Kind { runtime_error, validation_failure } kind = Kind::runtime_error;
    std::string detail;
    std::string suggested_focus;  // optional checker-LLM hint
};

inline std::string to_string(DiagnosticFeedback::Kind k) {
    return k == DiagnosticFeedback::Kind::runtime_error ? "runtime_error" : "validation_failure";
}

struct NodeFailed : GeoflowError {
    NodeFailed(std::string msg, ExecutionRecord rec, ValidationReport rep, int rounds)
        : GeoflowError(std::move(msg)), record(std::move(rec)), report(std::move(rep)),
          debug_rounds(rounds) {}
    ExecutionRecord record;
    ValidationReport report;
    int debug_rounds = 0;
};

// Retrieval context for tool synthesis; null catalog (or the ablation flags)
// means no reference material in the prompt.
struct RetrievalContext {
    const CatalogIndex* catalog = nullptr;
    int k_scripts = 5;
    int k_knowledge = 8;
    bool tools_enabled = true;
    bool knowledge_enabled = true;

    std::vector<SearchResult> script_refs(const std::string& query) const {
        if (!catalog || !tools_enabled || catalog->size() == 0) return {};
        return catalog->query_top_k(query, k_scripts, Tier::reference_script);
    }
    std::vector<SearchResult> knowledge_refs(const std::string& query) const {
        if (!catalog || !knowledge_enabled || catalog->size() == 0) return {};
        return catalog->query_top_k(query, k_knowledge, Tier::knowledge_chunk);
    }
};

struct CheckerConfig {
    bool enabled = true;     // disabled = one-shot ablation: no revisions
    bool llm_focus = false;  // ask the checker role for a revision hint
    std::vector<ValidationRule> extra_rules;
};

namespace detail {

inline std::string refs_text(const std::vector<SearchResult>& hits, const CatalogIndex* catalog,
                             bool include_body) {
    if (!catalog || hits.empty()) return "(none)";
    std::string out;
    for (const auto& h : hits) {
        const CatalogEntry* e = catalog->find(h.entry_id);
        if (!e) continue;
        out += "- " + e->entry_id + ": " + e->description + "\n";
        if (include_body && !e->body.empty()) out += "  " + e->body + "\n";
    }
    return out.empty() ? "(none)" : out;
}

inline std::string external_tools_text(const CatalogIndex* catalog) {
    if (!catalog) return "(none)";
    std::string out;
    for (const CatalogEntry* e : catalog->by_tier(Tier::external_command))
        out += "- " + e->entry_id + ": " + e->body + " (" + e->description + ")\n";
    return out.empty() ? "(none)" : out;
}

}  // namespace detail

// Round-1 tool synthesis for a node (one coder call).
inline ToolScript synthesize_node_tool(const WorkflowNode& node, const DataProfile& profile,
                                       const std::vector<SearchResult>& script_refs,
                                       const std::vector<SearchResult>& knowledge_refs,
                                       LlmGateway& gateway,
                                       const CatalogIndex* catalog = nullptr) {
    if (node.outputs.empty())
        throw ParameterError("node " + node.node_id + " declares no outputs, nothing to manifest");
    std::string prompt = gateway.prompts().render(
        "tool_synthesize",
        json{{"node_json", to_json(node).dump(2)},
             {"profile_narrative", profile.narrative},
             {"references", detail::refs_text(script_refs, catalog, true)},
             {"knowledge", detail::refs_text(knowledge_refs, catalog, false)},
             {"external_tools", detail::external_tools_text(catalog)}});
    ChatResponse resp = gateway.complete(make_request(AgentRole::coder, prompt));
    ToolScript script;
    script.node_id = node.node_id;
    script.round = 1;
    script.body = strip_code_fences(resp.text);
    for (const auto& h : script_refs) script.references.push_back(h.entry_id);
    for (const auto& h : knowledge_refs) script.references.push_back(h.entry_id);
    return script;
}

// Round k+1 from the prior script plus feedback (one coder call).
inline ToolScript revise_tool(const ToolScript& script, const DiagnosticFeedback& feedback,
                              LlmGateway& gateway) {
    if (feedback.node_id != script.node_id)
        throw ParameterError("feedback for node " + feedback.node_id +
                             " applied to script of node " + script.node_id);
    if (feedback.round != script.round)
        throw ParameterError("feedback round " + std::to_string(feedback.round) +
                             " does not match script round " + std::to_string(script.round));
    std::string focus_section;
    if (!feedback.suggested_focus.empty())
        focus_section = "Focus suggestion: " + feedback.suggested_focus + "\n";
    std::string prompt = gateway.prompts().render(
        "tool_revise", json{{"node_id", script.node_id},
                            {"round", script.round},
                            {"kind", to_string(feedback.kind)},
                            {"detail", feedback.detail},
                            {"focus_section", focus_section},
                            {"body", script.body}});
    ChatResponse resp = gateway.complete(make_request(AgentRole::coder, prompt));
    ToolScript revised = script;
    revised.round = script.round + 1;
    revised.body = strip_code_fences(resp.text);
    return revised;
}

struct NodeLoopResult {
    ExecutionRecord record;
    ValidationReport report;
    int debug_rounds = 0;
};

namespace detail {

inline std::vector<ValidationRule> node_rules(const WorkflowNode& node,
                                              const CheckerConfig& checker) {
    std::vector<ValidationRule> rules;
    for (const auto& output : node.outputs) {
        auto defaults = default_rules_for(output.kind, output.name);
        rules.insert(rules.end(), defaults.begin(), defaults.end());
    }
    rules.insert(rules.end(), checker.extra_rules.begin(), checker.extra_rules.end());
    return rules;
}

inline std::string inputs_env(const WorkflowNode& node, const Workspace& ws) {
    std::string out;
    for (const auto& b : node.inputs) {
        if (!out.empty()) out += "\n";
        fs::path p(b.path);
        if (!p.is_absolute()) p = ws.root / p;
        out += b.name + "=" + p.string();
    }
    return out;
}

inline std::string outputs_env(const WorkflowNode& node) {
    std::string out;
    for (const auto& b : node.outputs) {
        if (!out.empty()) out += "\n";
        out += b.name + "=" + b.path;
    }
    return out;
}

inline std::string tools_env(const CatalogIndex* catalog) {
    if (!catalog) return "";
    std::string out;
    for (const CatalogEntry* e : catalog->by_tier(Tier::external_command)) {
        if (!out.empty()) out += "\n";
        out += e->entry_id + "=" + e->body;
    }
    return out;
}

}  // namespace detail

// The autonomous error-correction closed loop for one node. Success means
// exit 0 AND a passing rule report; anything else builds feedback and revises,
// at most max_rounds times. debug_rounds = executed rounds - 1.
inline NodeLoopResult run_node_loop(const WorkflowNode& node, const DataProfile& profile,
                                    const RetrievalContext& retrieval, LlmGateway& gateway,
                                    Workspace& ws, SandboxConfig sandbox_cfg,
                                    const CheckerConfig& checker, int max_rounds) {
    if (max_rounds < 0) throw ParameterError("max_rounds must be non-negative");
    gateway.set_stage(node.stage);
    ws.ledger->append(node.stage, EventKind::node_started,
                      json{{"node_id", node.node_id}, {"purpose", node.purpose}});
    if (max_rounds == 0)
        throw NodeFailed("node " + node.node_id + " given a zero round budget",
                         ExecutionRecord{}, ValidationReport{}, 0);

    sandbox_cfg.workdir = ws.node_dir(node.node_id);
    sandbox_cfg.workspace_root = ws.root;
    sandbox_cfg.extra_env["GF_INPUTS"] = detail::inputs_env(node, ws);
    sandbox_cfg.extra_env["GF_OUTPUTS"] = detail::outputs_env(node);
    sandbox_cfg.extra_env["GF_PARAMS"] = node.params.dump();
    std::string tools = detail::tools_env(retrieval.catalog);
    if (!tools.empty()) sandbox_cfg.extra_env["GF_TOOLS"] = tools;

    const std::string query = node.purpose;
    auto script_refs = retrieval.script_refs(query);
    auto knowledge_refs = retrieval.knowledge_refs(query);
    const auto rules = detail::node_rules(node, checker);

    ToolScript script = synthesize_node_tool(node, profile, script_refs, knowledge_refs, gateway,
                                             retrieval.catalog);
    ws.ledger->append(node.stage, EventKind::tool_created,
                      json{{"node_id", node.node_id},
                           {"round", script.round},
                           {"references", script.references}});

    ExecutionRecord record;
    ValidationReport report;
    for (int round = 1; round <= max_rounds; ++round) {
        record = execute_script(script, sandbox_cfg);
        ws.ledger->append(node.stage, EventKind::execution, to_json(record));

        ArtifactManifest manifest = record.manifest.value_or(ArtifactManifest{});
        report = evaluate_rules(manifest, rules, sandbox_cfg.workdir);
        if (record.succeeded() && !record.manifest.has_value())
            report.fail("manifest", "tool wrote no manifest.json");
        ws.ledger->append(node.stage, EventKind::validation,
                          json{{"node_id", node.node_id},
                               {"round", round},
                               {"pass", report.pass},
                               {"failures", to_json(report).at("failures")}});

        const bool success = record.succeeded() && report.pass;
        if (success) return NodeLoopResult{record, report, round - 1};

        if (!checker.enabled || round == max_rounds) break;

        DiagnosticFeedback feedback;
        feedback.node_id = node.node_id;
        feedback.round = round;
        if (!record.succeeded()) {
            feedback.kind = DiagnosticFeedback::Kind::runtime_error;
            feedback.detail = record.timed_out
                                  ? "execution timed out after " +
                                        std::to_string(record.wall_time.count()) + " ms"
                                  : record.traceback.value_or("exit status " +
                                                              std::to_string(record.exit_status));
        } else {
            feedback.kind = DiagnosticFeedback::Kind::validation_failure;
            feedback.detail = report.failure_text();
            if (feedback.detail.empty()) feedback.detail = "tool wrote no manifest.json";
        }
        if (checker.llm_focus) {
            std::string prompt = gateway.prompts().render(
                "checker_focus",
                json{{"node_id", node.node_id}, {"detail", feedback.detail}});
            feedback.suggested_focus =
                gateway.complete(make_request(AgentRole::checker, prompt)).text;
        }

        ws.ledger->append(node.stage, EventKind::revision,
                          json{{"node_id", node.node_id},
                               {"from_round", round},
                               {"kind", to_string(feedback.kind)},
                               {"detail", feedback.detail.substr(0, 2000)}});
        script = revise_tool(script, feedback, gateway);
        ws.ledger->append(node.stage, EventKind::tool_created,
                          json{{"node_id", node.node_id},
                               {"round", script.round},
                               {"references", script.references}});
    }
    const int rounds_run = std::min(script.round, max_rounds);
    throw NodeFailed("node " + node.node_id + " failed after " + std::to_string(rounds_run) +
                         " rounds",
                     record, report, rounds_run - 1);
}

// ---------------------------------------------------------------------------
// Workflow runner

enum class NodeStatus { completed, failed, skipped };

inline std::string to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::completed: return "completed";
        case NodeStatus::failed: return "failed";
        case NodeStatus::skipped: return "skipped";
    }
    return "failed";
}

struct NodeOutcome {
    NodeStatus status = NodeStatus::skipped;
    std::optional<ExecutionRecord> record;
    std::optional<ValidationReport> report;
    int debug_rounds = 0;
    std::chrono::milliseconds wall{0};
    std::string error;
};

struct RunResult {
    std::vector<std::string> order;
    std::map<std::string, NodeOutcome> nodes;
    std::map<Stage, std::chrono::milliseconds> stage_time;

    bool all_completed() const {
        for (const auto& [id, outcome] : nodes)
            if (outcome.status != NodeStatus::completed) return false;
        return true;
    }
    int total_debug_rounds() const {
        int total = 0;
        for (const auto& [id, outcome] : nodes) total += outcome.debug_rounds;
        return total;
    }
};

struct WorkflowDeps {
    LlmGateway& gateway;
    Workspace& workspace;
    RetrievalContext retrieval;
    SandboxConfig sandbox;
    CheckerConfig checker;
    int max_rounds = 10;
    bool parallel = false;
    // Nodes are not started past this point; a hung node is still bounded by
    // the sandbox timeout.
    std::optional<std::chrono::steady_clock::time_point> deadline;

    bool past_deadline() const {
        return deadline && std::chrono::steady_clock::now() >= *deadline;
    }
};

namespace detail {

inline NodeOutcome run_one_node(const WorkflowNode& node, const DataProfile& profile,
                                WorkflowDeps& deps) {
    NodeOutcome outcome;
    const auto started = std::chrono::steady_clock::now();
    try {
        NodeLoopResult r = run_node_loop(node, profile, deps.retrieval, deps.gateway,
                                         deps.workspace, deps.sandbox, deps.checker,
                                         deps.max_rounds);
        outcome.status = NodeStatus::completed;
        outcome.record = std::move(r.record);
        outcome.report = std::move(r.report);
        outcome.debug_rounds = r.debug_rounds;
    } catch (const NodeFailed& e) {
        outcome.status = NodeStatus::failed;
        outcome.record = e.record;
        outcome.report = e.report;
        outcome.debug_rounds = e.debug_rounds;
        outcome.error = e.what();
    }
    outcome.wall = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return outcome;
}

}  // namespace detail

// Nodes run in the deterministic topological order, strictly sequentially by
// default. A failed node aborts its descendants (marked skipped); independent
// branches continue. Parallel mode runs ready nodes concurrently under the
// same per-node contract.
inline RunResult run_workflow(const WorkflowDAG& dag, const DataProfile& profile,
                              WorkflowDeps& deps) {
    DagValidation validation = validate_dag(dag, profile);
    if (!validation.ok) {
        std::string msg = "refusing to run an invalid DAG:";
        for (const auto& v : validation.violations) msg += " " + v + ";";
        throw ParameterError(msg);
    }

    RunResult result;
    result.order = validation.order;

    std::map<std::string, std::vector<std::string>> parents;
    for (const auto& [a, b] : dag.edges) parents[b].push_back(a);

    std::map<Stage, std::chrono::steady_clock::time_point> stage_start;
    std::map<Stage, std::chrono::steady_clock::time_point> stage_end;
    auto note_stage = [&](Stage s) {
        auto now = std::chrono::steady_clock::now();
        if (!stage_start.count(s)) stage_start[s] = now;
        stage_end[s] = now;
    };

    auto ancestors_ok = [&](const std::string& id) {
        for (const auto& p : parents[id]) {
            auto it = result.nodes.find(p);
            if (it == result.nodes.end() || it->second.status != NodeStatus::completed)
                return false;
        }
        return true;
    };

    if (!deps.parallel) {
        for (const auto& id : result.order) {
            const WorkflowNode* node = dag.find(id);
            if (deps.past_deadline()) {
                NodeOutcome skipped;
                skipped.status = NodeStatus::skipped;
                skipped.error = "case time cap reached";
                result.nodes[id] = std::move(skipped);
                continue;
            }
            if (!ancestors_ok(id)) {
                NodeOutcome skipped;
                skipped.status = NodeStatus::skipped;
                skipped.error = "ancestor failed";
                result.nodes[id] = std::move(skipped);
                continue;
            }
            note_stage(node->stage);
            result.nodes[id] = detail::run_one_node(*node, profile, deps);
            note_stage(node->stage);
        }
    } else {
        std::set<std::string> pending(result.order.begin(), result.order.end());
        std::map<std::string, std::future<NodeOutcome>> running;
        while (!pending.empty() || !running.empty()) {
            // settle finished nodes
            for (auto it = running.begin(); it != running.end();) {
                if (it->second.wait_for(std::chrono::milliseconds(0)) ==
                    std::future_status::ready) {
                    result.nodes[it->first] = it->second.get();
                    note_stage(dag.find(it->first)->stage);
                    it = running.erase(it);
                } else {
                    ++it;
                }
            }
            // skip nodes whose ancestors can no longer complete
            for (auto it = pending.begin(); it != pending.end();) {
                bool doomed = false;
                for (const auto& p : parents[*it]) {
                    auto done = result.nodes.find(p);
                    if (done != result.nodes.end() &&
                        done->second.status != NodeStatus::completed)
                        doomed = true;
                }
                if (doomed) {
                    NodeOutcome skipped;
                    skipped.status = NodeStatus::skipped;
                    skipped.error = "ancestor failed";
                    result.nodes[*it] = std::move(skipped);
                    it = pending.erase(it);
                } else {
                    ++it;
                }
            }
            // launch everything ready (in topological order for determinism)
            for (const auto& id : result.order) {
                if (!pending.count(id) || running.count(id)) continue;
                if (deps.past_deadline()) {
                    NodeOutcome skipped;
                    skipped.status = NodeStatus::skipped;
                    skipped.error = "case time cap reached";
                    result.nodes[id] = std::move(skipped);
                    pending.erase(id);
                    continue;
                }
                bool ready = true;
                for (const auto& p : parents[id])
                    ready = ready && result.nodes.count(p) &&
                            result.nodes[p].status == NodeStatus::completed;
                if (!ready) continue;
                const WorkflowNode* node = dag.find(id);
                note_stage(node->stage);
                running.emplace(id, std::async(std::launch::async, [node, &profile, &deps] {
                                    return detail::run_one_node(*node, profile, deps);
                                }));
                pending.erase(id);
            }
            if (!running.empty())
                std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
    }

    for (const auto& [stage, start] : stage_start) {
        result.stage_time[stage] = std::chrono::duration_cast<std::chrono::milliseconds>(
            stage_end[stage] - start);
        deps.workspace.ledger->append(
            stage, EventKind::stage_done,
            json{{"stage", to_string(stage)},
                 {"elapsed_ms", result.stage_time[stage].count()},
                 {"nodes", [&] {
                      int count = 0;
                      for (const auto& n : dag.nodes)
                          if (n.stage == stage) ++count;
                      return count;
                  }()}});
    }
    return result;
}

inline json to_json(const RunResult& r) {
    json nodes = json::object();
    for (const auto& [id, outcome] : r.nodes) {
        json out{{"status", to_string(outcome.status)},
                 {"debug_rounds", outcome.debug_rounds},
                 {"wall_time_ms", outcome.wall.count()}};
        if (!outcome.error.empty()) out["error"] = outcome.error;
        if (outcome.report) out["validation"] = to_json(*outcome.report);
        nodes[id] = std::move(out);
    }
    json stage_time = json::object();
    for (const auto& [stage, ms] : r.stage_time) stage_time[to_string(stage)] = ms.count();
    return json{{"order", r.order},
                {"nodes", nodes},
                {"stage_time_ms", stage_time},
                {"all_completed", r.all_completed()}};
}

}  // namespace geoflow
