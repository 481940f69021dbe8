#pragma once

// End-to-end orchestration for one task: probe, plan, compile, execute, and
// the run report. Ablation switches substitute the documented degraded paths.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoflow/config.hpp"
#include "geoflow/core.hpp"
#include "geoflow/data_summary.hpp"
#include "geoflow/executor.hpp"
#include "geoflow/llm.hpp"
#include "geoflow/planner.hpp"
#include "geoflow/retrieval.hpp"

namespace geoflow {

inline std::shared_ptr<ChatBackend> build_backend(const EngineConfig& cfg) {
    if (cfg.backend == BackendKind::scripted) {
        if (cfg.fixture_path.empty())
            throw ParameterError("scripted backend requires a fixture file");
        return ScriptedBackend::from_file(cfg.fixture_path);
    }
    HttpBackendConfig http;
    http.endpoint = cfg.endpoint;
    http.api_key = cfg.api_key;
    http.model = cfg.model;
    return std::make_shared<HttpBackend>(http);
}

inline std::unique_ptr<LlmGateway> build_gateway(const EngineConfig& cfg,
                                                 std::shared_ptr<Ledger> ledger) {
    CallBudget budget;
    budget.max_calls = cfg.max_calls;
    auto gateway = std::make_unique<LlmGateway>(build_backend(cfg), std::move(ledger), budget);
    if (!cfg.prompts_dir.empty()) gateway->prompts().load_directory(cfg.prompts_dir);
    return gateway;
}

struct PipelineOutcome {
    bool ok = false;
    std::string failure_kind;  // probe_failed | planning_failed | compile_failed | node_failed
    std::string failure_detail;
    DataProfile profile;
    WorkflowDAG dag;
    RunResult run;
    fs::path report_path;
};

namespace detail {

inline SandboxConfig sandbox_from(const EngineConfig& cfg) {
    SandboxConfig sandbox;
    sandbox.interpreter = cfg.interpreter;
    sandbox.timeout = std::chrono::seconds(cfg.node_timeout_s);
    return sandbox;
}

inline void write_run_report(const fs::path& path, const TaskInstruction& task,
                             const PipelineOutcome& outcome, const LlmGateway& gateway) {
    json report{{"task", to_json(task)},
                {"ok", outcome.ok},
                {"profile", to_json(outcome.profile)},
                {"dag", to_json(outcome.dag)},
                {"run", to_json(outcome.run)},
                {"llm_calls", gateway.budget().calls_used}};
    if (!outcome.failure_kind.empty()) {
        report["failure"] = {{"kind", outcome.failure_kind},
                             {"detail", outcome.failure_detail}};
    }
    std::ofstream out(path);
    out << report.dump(2) << "\n";
}

}  // namespace detail

// The full loop for one task instruction. Failures of a whole phase are
// reported in the outcome, not thrown; the report is written either way.
inline PipelineOutcome run_pipeline(const TaskInstruction& task,
                                    const std::vector<fs::path>& data_pointers, Workspace& ws,
                                    const EngineConfig& cfg, LlmGateway& gateway,
                                    const CatalogIndex* catalog = nullptr,
                                    std::optional<std::chrono::steady_clock::time_point>
                                        deadline = std::nullopt) {
    validate(task);
    validate(cfg);
    PipelineOutcome outcome;
    const Stage lead_stage = first_stage(task.stage_scope);
    gateway.set_stage(lead_stage);

    auto finish = [&](const std::string& kind, const std::string& detail) {
        outcome.failure_kind = kind;
        outcome.failure_detail = detail;
        outcome.report_path = ws.root / "report.json";
        detail::write_run_report(outcome.report_path, task, outcome, gateway);
        return outcome;
    };

    // 1) data exploration
    try {
        if (cfg.disable_data_summary) {
            outcome.profile = passthrough_profile(data_pointers);
        } else {
            ProbeResult probe = run_probe_loop(task, data_pointers, gateway, ws,
                                               detail::sandbox_from(cfg), cfg.probe_attempts);
            outcome.profile = std::move(probe.profile);
            outcome.profile.narrative = distill_profile(outcome.profile.items, &gateway);
        }
    } catch (const ProbeFailed& e) {
        return finish("probe_failed", e.what());
    } catch (const GeoflowError& e) {
        return finish("probe_failed", e.what());
    }

    // 2) retrieval context for planning
    std::vector<SearchResult> knowledge_hits;
    std::vector<SearchResult> tool_hits;
    if (catalog && catalog->size() > 0) {
        if (!cfg.disable_knowledge)
            knowledge_hits = catalog->query_top_k(task.text, cfg.k_knowledge,
                                                  Tier::knowledge_chunk);
        if (!cfg.disable_tools)
            tool_hits = catalog->query_top_k(task.text, cfg.k_scripts, Tier::reference_script);
    }

    // 3) plan and compile
    PlannerParams planner_params{cfg.plan_candidates, cfg.merge_threshold,
                                 cfg.availability_weight, cfg.rigor_weight};
    if (cfg.disable_planner) {
        outcome.dag = single_node_dag(task, outcome.profile);
        ws.ledger->append(lead_stage, EventKind::plan_selected,
                          json{{"plan_id", "single_node"}, {"ablation", "planner_disabled"}});
    } else {
        try {
            auto candidates = generate_candidate_plans(
                task, outcome.profile, knowledge_hits, tool_hits, cfg.plan_candidates, gateway,
                cfg.disable_tools ? nullptr : catalog, cfg.planner_temperature);
            AggregatedPlan aggregated =
                aggregate_plans(candidates, outcome.profile,
                                cfg.disable_tools ? nullptr : catalog, planner_params);
            ws.ledger->append(lead_stage, EventKind::plan_selected,
                              json{{"plan_id", aggregated.plan.plan_id},
                                   {"merged_from", aggregated.merged_from},
                                   {"score",
                                    {{"availability", aggregated.score.availability},
                                     {"rigor", aggregated.score.rigor},
                                     {"total", aggregated.score.total}}},
                                   {"plan", to_json(aggregated.plan)}});
            outcome.dag = compile_workflow(aggregated, outcome.profile, gateway);
        } catch (const PlanningFailed& e) {
            return finish("planning_failed", e.what());
        } catch (const CompileFailed& e) {
            return finish("compile_failed", e.what());
        } catch (const GeoflowError& e) {
            return finish("planning_failed", e.what());
        }
    }

    // 4) execute
    RetrievalContext retrieval;
    retrieval.catalog = catalog;
    retrieval.k_scripts = cfg.k_scripts;
    retrieval.k_knowledge = cfg.k_knowledge;
    retrieval.tools_enabled = !cfg.disable_tools;
    retrieval.knowledge_enabled = !cfg.disable_knowledge;

    CheckerConfig checker;
    checker.enabled = !cfg.disable_checker;
    checker.llm_focus = cfg.checker_llm_focus;

    WorkflowDeps deps{gateway,
                      ws,
                      retrieval,
                      detail::sandbox_from(cfg),
                      checker,
                      cfg.max_debug_rounds + 1,
                      cfg.parallel_nodes,
                      deadline};
    try {
        outcome.run = run_workflow(outcome.dag, outcome.profile, deps);
    } catch (const GeoflowError& e) {
        return finish("node_failed", e.what());
    }

    outcome.ok = outcome.run.all_completed();
    if (outcome.ok) {
        outcome.report_path = ws.root / "report.json";
        detail::write_run_report(outcome.report_path, task, outcome, gateway);
        return outcome;
    }
    std::string detail_msg;
    for (const auto& [id, node] : outcome.run.nodes)
        if (node.status != NodeStatus::completed)
            detail_msg += id + "=" + to_string(node.status) + " ";
    return finish("node_failed", detail_msg);
}

}  // namespace geoflow
