#pragma once

// Benchmark harness: case schema, stage-wise and end-to-end runners, and the
// Accuracy / Debug Rounds / Running Time metric suite.

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoflow/config.hpp"
#include "geoflow/core.hpp"
#include "geoflow/pipeline.hpp"
#include "geoflow/retrieval.hpp"
#include "geoflow/validation.hpp"

namespace geoflow {

// ---------------------------------------------------------------------------
// Case schema

struct NumericExpect {
    std::string key;  // "results.<key>" or "<artifact>.<stat field>"
    double expected = 0.0;
    double rel_tol = 0.01;
    double abs_tol = 1e-6;
};

struct StageExpectation {
    json metadata_expect = json::object();
    std::vector<NumericExpect> numeric_expect;
    std::vector<std::string> location_expect;  // relative to runs/<id>/nodes/

    bool empty() const {
        return metadata_expect.empty() && numeric_expect.empty() && location_expect.empty();
    }
};

inline StageExpectation stage_expectation_from_json(const json& j) {
    StageExpectation e;
    e.metadata_expect = j.value("metadata_expect", json::object());
    if (j.contains("numeric_expect")) {
        for (const auto& nj : j.at("numeric_expect")) {
            NumericExpect n;
            n.key = nj.at("key").get<std::string>();
            n.expected = nj.at("expected").get<double>();
            n.rel_tol = nj.value("rel_tol", 0.01);
            n.abs_tol = nj.value("abs_tol", 1e-6);
            if (n.rel_tol <= 0 || n.abs_tol <= 0)
                throw CaseInvalid("tolerances must be positive for " + n.key);
            e.numeric_expect.push_back(std::move(n));
        }
    }
    if (j.contains("location_expect"))
        e.location_expect = j.at("location_expect").get<std::vector<std::string>>();
    if (e.empty()) throw CaseInvalid("stage expectation with no expectations");
    return e;
}

inline json to_json(const StageExpectation& e) {
    json numeric = json::array();
    for (const auto& n : e.numeric_expect)
        numeric.push_back(json{{"key", n.key},
                               {"expected", n.expected},
                               {"rel_tol", n.rel_tol},
                               {"abs_tol", n.abs_tol}});
    return json{{"metadata_expect", e.metadata_expect},
                {"numeric_expect", numeric},
                {"location_expect", e.location_expect}};
}

struct BenchCase {
    std::string case_id;
    std::string domain;
    TaskInstruction instruction;
    std::vector<fs::path> inputs;  // absolute after load
    std::map<Stage, StageExpectation> stage_specs;
    std::vector<CatalogEntry> provided_tools;
    std::map<std::string, fs::path> fixtures;  // stage name or "end_to_end" -> file
    fs::path dir;

    fs::path truth_dir(Stage s) const { return dir / "truth" / to_string(s); }
};

inline BenchCase bench_case_from_json(const json& j, const fs::path& case_dir) {
    BenchCase c;
    c.dir = fs::absolute(case_dir);
    c.case_id = j.at("case_id").get<std::string>();
    c.domain = j.value("domain", "unknown");
    c.instruction = task_from_json(j.at("instruction"));
    for (const auto& input : j.at("inputs")) {
        fs::path p = case_dir / input.get<std::string>();
        if (!fs::exists(p))
            throw CaseInvalid("case " + c.case_id + " names a missing input: " + p.string());
        c.inputs.push_back(fs::absolute(p));
    }
    if (j.contains("stage_specs")) {
        for (auto& [stage_name, spec] : j.at("stage_specs").items())
            c.stage_specs[stage_from_string(stage_name)] = stage_expectation_from_json(spec);
    }
    if (c.instruction.stage_scope == StageScope::full_pipeline && c.stage_specs.size() != 3)
        throw CaseInvalid("full-pipeline case " + c.case_id + " must carry all three stage specs");
    if (j.contains("provided_tools")) {
        for (const auto& tj : j.at("provided_tools")) {
            CatalogEntry e = catalog_entry_from_json(tj);
            // tools may reference files bundled with the case
            const std::string marker = "{case_dir}";
            auto pos = e.body.find(marker);
            while (pos != std::string::npos) {
                e.body.replace(pos, marker.size(), fs::absolute(case_dir).string());
                pos = e.body.find(marker, pos);
            }
            validate(e);
            c.provided_tools.push_back(std::move(e));
        }
    }
    if (j.contains("fixtures")) {
        for (auto& [name, rel] : j.at("fixtures").items()) {
            fs::path p = case_dir / rel.get<std::string>();
            if (!fs::exists(p))
                throw CaseInvalid("case " + c.case_id + " names a missing fixture: " + p.string());
            c.fixtures[name] = fs::absolute(p);
        }
    }
    return c;
}

inline std::vector<BenchCase> load_cases(const fs::path& dir) {
    if (!fs::exists(dir)) throw CaseInvalid("case directory missing: " + dir.string());
    std::vector<fs::path> case_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "case.json")) case_dirs.push_back(e.path());
    std::sort(case_dirs.begin(), case_dirs.end());
    std::vector<BenchCase> cases;
    for (const auto& cd : case_dirs) {
        std::ifstream in(cd / "case.json");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw CaseInvalid("unreadable case.json in " + cd.string() + ": " + e.what());
        }
        cases.push_back(bench_case_from_json(j, cd));
    }
    return cases;
}

// ---------------------------------------------------------------------------
// Scoring

struct StageResult {
    std::string case_id;
    Stage stage = Stage::data_preparation;
    bool passed = false;
    std::vector<std::string> fail_reasons;
    int debug_rounds = 0;
    std::chrono::milliseconds running_time{0};
};

// What one stage of one run produced: completed nodes in topological order.
struct StageOutputs {
    struct NodeView {
        std::string node_id;
        fs::path workdir;
        ArtifactManifest manifest;
    };
    fs::path nodes_dir;
    std::vector<NodeView> nodes;
    bool stage_ran = false;

    json merged_results() const {
        json out = json::object();
        for (const auto& n : nodes) {
            if (!n.manifest.results.is_object()) continue;
            for (auto& [k, v] : n.manifest.results.items()) out[k] = v;
        }
        return out;
    }
};

inline StageOutputs collect_stage_outputs(const Workspace& ws, const WorkflowDAG& dag,
                                          const RunResult& run, Stage stage) {
    StageOutputs out;
    out.nodes_dir = ws.nodes_dir();
    for (const auto& id : run.order) {
        const WorkflowNode* node = dag.find(id);
        if (!node || node->stage != stage) continue;
        out.stage_ran = true;
        auto it = run.nodes.find(id);
        if (it == run.nodes.end() || it->second.status != NodeStatus::completed) continue;
        StageOutputs::NodeView view;
        view.node_id = id;
        view.workdir = ws.nodes_dir() / id;
        if (it->second.record && it->second.record->manifest)
            view.manifest = *it->second.record->manifest;
        out.nodes.push_back(std::move(view));
    }
    return out;
}

namespace detail {

inline std::optional<RasterStats> find_artifact_stats(const StageOutputs& outputs,
                                                      const std::string& artifact_name) {
    for (const auto& n : outputs.nodes) {
        const Artifact* a = n.manifest.find(artifact_name);
        if (a) return artifact_stats(*a, n.workdir);
    }
    return std::nullopt;
}

inline std::optional<json> stat_field(const RasterStats& s, const std::string& field) {
    if (field == "rows") return json(s.rows);
    if (field == "cols") return json(s.cols);
    if (field == "bands") return json(s.bands);
    if (field == "crs") return json(s.crs);
    auto num = [](double v) -> std::optional<json> {
        if (std::isnan(v)) return std::nullopt;
        return json(v);
    };
    if (field == "min") return num(s.min);
    if (field == "max") return num(s.max);
    if (field == "mean") return num(s.mean);
    if (field == "nodata_fraction") return json(s.nodata_fraction);
    return std::nullopt;
}

// "results.<key>" or "<artifact>.<field>"
inline std::optional<json> lookup_key(const StageOutputs& outputs, const std::string& key) {
    auto dot = key.find('.');
    if (dot == std::string::npos) return std::nullopt;
    const std::string head = key.substr(0, dot);
    const std::string rest = key.substr(dot + 1);
    if (head == "results") {
        json results = outputs.merged_results();
        if (results.contains(rest)) return results.at(rest);
        return std::nullopt;
    }
    auto stats = find_artifact_stats(outputs, head);
    if (!stats) {
        // artifact names may themselves carry dots (e.g. ndvi.asc): retry with
        // the longest artifact prefix
        auto last_dot = key.rfind('.');
        if (last_dot != dot) {
            stats = find_artifact_stats(outputs, key.substr(0, last_dot));
            if (stats) return stat_field(*stats, key.substr(last_dot + 1));
        }
        return std::nullopt;
    }
    return stat_field(*stats, rest);
}

inline bool within_tolerance(double actual, double expected, double rel, double abs) {
    return std::abs(actual - expected) <= std::max(abs, rel * std::abs(expected));
}

}  // namespace detail

// Pass <=> every expected location exists AND every metadata key matches AND
// every numeric expectation is inside max(abs_tol, rel_tol*|expected|).
inline StageResult score_stage(const StageOutputs& outputs, const StageExpectation& expect,
                               Stage stage, const std::string& case_id) {
    StageResult result;
    result.case_id = case_id;
    result.stage = stage;

    for (const auto& rel : expect.location_expect) {
        if (!fs::exists(outputs.nodes_dir / rel))
            result.fail_reasons.push_back("output not localized in designated storage: " + rel);
    }

    for (auto& [key, expected] : expect.metadata_expect.items()) {
        auto actual = detail::lookup_key(outputs, key);
        if (!actual) {
            result.fail_reasons.push_back("metadata key missing: " + key);
            continue;
        }
        if (expected.is_string()) {
            if (!actual->is_string() || actual->get<std::string>() != expected.get<std::string>())
                result.fail_reasons.push_back("metadata mismatch for " + key + ": got " +
                                              actual->dump() + ", want " + expected.dump());
        } else if (expected.is_number_integer() && actual->is_number_integer()) {
            if (actual->get<long>() != expected.get<long>())
                result.fail_reasons.push_back("metadata mismatch for " + key + ": got " +
                                              actual->dump() + ", want " + expected.dump());
        } else if (expected.is_number()) {
            if (!actual->is_number() ||
                !detail::within_tolerance(actual->get<double>(), expected.get<double>(), 0.01,
                                          1e-6))
                result.fail_reasons.push_back("metadata mismatch for " + key + ": got " +
                                              actual->dump() + ", want " + expected.dump());
        } else {
            if (*actual != expected)
                result.fail_reasons.push_back("metadata mismatch for " + key);
        }
    }

    // Geospatial analysis insights must land as key-value pairs.
    if (stage == Stage::geospatial_analysis && !expect.numeric_expect.empty()) {
        bool any_results = outputs.merged_results().is_object() &&
                           !outputs.merged_results().empty();
        if (!any_results)
            result.fail_reasons.push_back("results not structured as key-value pairs");
    }

    for (const auto& n : expect.numeric_expect) {
        auto actual = detail::lookup_key(outputs, n.key);
        if (!actual || !actual->is_number()) {
            result.fail_reasons.push_back("numeric key missing: " + n.key);
            continue;
        }
        if (!detail::within_tolerance(actual->get<double>(), n.expected, n.rel_tol, n.abs_tol)) {
            std::ostringstream msg;
            msg << "numeric deviation for " << n.key << ": got " << actual->get<double>()
                << ", want " << n.expected << " (rel " << n.rel_tol << ", abs " << n.abs_tol
                << ")";
            result.fail_reasons.push_back(msg.str());
        }
    }

    result.passed = result.fail_reasons.empty();
    return result;
}

// ---------------------------------------------------------------------------
// Metrics

struct StageMetrics {
    double accuracy = 0.0;
    double mean_debug_rounds = 0.0;
    int max_debug_rounds = 0;
    double mean_running_time_ms = 0.0;
};

struct MetricsReport {
    enum class Mode { stage_wise, end_to_end };
    Mode mode = Mode::stage_wise;
    int n_cases = 0;
    std::map<Stage, StageMetrics> per_stage;
};

inline std::string to_string(MetricsReport::Mode m) {
    return m == MetricsReport::Mode::stage_wise ? "stage_wise" : "end_to_end";
}

inline json to_json(const MetricsReport& r) {
    json per_stage = json::object();
    for (const auto& [stage, m] : r.per_stage) {
        json sj{{"accuracy", m.accuracy}};
        if (r.mode == MetricsReport::Mode::stage_wise) {
            sj["mean_debug_rounds"] = m.mean_debug_rounds;
            sj["max_debug_rounds"] = m.max_debug_rounds;
            sj["mean_running_time_ms"] = m.mean_running_time_ms;
        }
        per_stage[to_string(stage)] = std::move(sj);
    }
    return json{{"mode", to_string(r.mode)}, {"n_cases", r.n_cases}, {"per_stage", per_stage}};
}

inline MetricsReport metrics_report_from_json(const json& j) {
    MetricsReport r;
    r.mode = j.at("mode").get<std::string>() == "end_to_end" ? MetricsReport::Mode::end_to_end
                                                             : MetricsReport::Mode::stage_wise;
    r.n_cases = j.at("n_cases").get<int>();
    for (auto& [stage_name, sj] : j.at("per_stage").items()) {
        StageMetrics m;
        m.accuracy = sj.at("accuracy").get<double>();
        if (r.mode == MetricsReport::Mode::stage_wise) {
            m.mean_debug_rounds = sj.value("mean_debug_rounds", 0.0);
            m.max_debug_rounds = sj.value("max_debug_rounds", 0);
            m.mean_running_time_ms = sj.value("mean_running_time_ms", 0.0);
        }
        r.per_stage[stage_from_string(stage_name)] = m;
    }
    return r;
}

enum class ReportFormat { text_table, structured };

inline std::string emit_report(const MetricsReport& report, ReportFormat format) {
    if (format == ReportFormat::structured) return to_json(report).dump(2) + "\n";
    std::ostringstream out;
    out << "mode: " << to_string(report.mode) << "   cases: " << report.n_cases << "\n";
    char line[256];
    if (report.mode == MetricsReport::Mode::stage_wise) {
        out << "stage                 accuracy%   mean_debug  max_debug   mean_time_s\n";
        for (const auto& [stage, m] : report.per_stage) {
            std::snprintf(line, sizeof(line), "%-21s %9.2f %11.2f %10d %12.3f\n",
                          to_string(stage).c_str(), 100.0 * m.accuracy, m.mean_debug_rounds,
                          m.max_debug_rounds, m.mean_running_time_ms / 1000.0);
            out << line;
        }
    } else {
        out << "stage                 accuracy%\n";
        for (const auto& [stage, m] : report.per_stage) {
            std::snprintf(line, sizeof(line), "%-21s %9.2f\n", to_string(stage).c_str(),
                          100.0 * m.accuracy);
            out << line;
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Runners

struct BenchOutcome {
    MetricsReport report;
    std::vector<StageResult> results;
};

namespace detail {

inline StageScope scope_of(Stage s) {
    switch (s) {
        case Stage::data_preparation: return StageScope::data_preparation;
        case Stage::feature_extraction: return StageScope::feature_extraction;
        case Stage::geospatial_analysis: return StageScope::geospatial_analysis;
    }
    return StageScope::full_pipeline;
}

inline std::string stage_slug(Stage s) {
    switch (s) {
        case Stage::data_preparation: return "dp";
        case Stage::feature_extraction: return "fe";
        case Stage::geospatial_analysis: return "ga";
    }
    return "dp";
}

inline std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

inline CatalogIndex case_catalog(const BenchCase& c, const CatalogIndex* global) {
    CatalogIndex catalog;
    if (global) catalog = *global;
    for (const auto& tool : c.provided_tools) {
        if (!catalog.find(tool.entry_id)) catalog.add(tool);
    }
    return catalog;
}

inline int ledger_debug_rounds(const Workspace& ws) {
    int n = 0;
    for (const auto& ev : load_ledger_file(ws.ledger_path()).events)
        if (ev.kind == EventKind::revision) ++n;
    return n;
}

struct CaseRun {
    PipelineOutcome outcome;
    std::optional<Workspace> ws;
    int debug_rounds = 0;
    std::chrono::milliseconds wall{0};
    std::string engine_error;
};

inline CaseRun run_case(const BenchCase& c, EngineConfig cfg, const fs::path& work_base,
                        const std::string& run_id, StageScope scope,
                        const std::vector<fs::path>& pointers,
                        const CatalogIndex* global_catalog, const std::string& fixture_key) {
    CaseRun out;
    if (cfg.backend == BackendKind::scripted) {
        auto it = c.fixtures.find(fixture_key);
        if (it != c.fixtures.end()) cfg.fixture_path = it->second.string();
    }
    const auto started = std::chrono::steady_clock::now();
    try {
        out.ws = create_workspace(run_id, work_base);
        CatalogIndex catalog = case_catalog(c, global_catalog);
        auto gateway = build_gateway(cfg, out.ws->ledger);
        TaskInstruction task = c.instruction;
        task.id = c.case_id + "-" + run_id;
        task.stage_scope = scope;
        auto deadline = started + std::chrono::seconds(cfg.case_time_cap_s);
        out.outcome = run_pipeline(task, pointers, *out.ws, cfg, *gateway,
                                   catalog.size() ? &catalog : nullptr, deadline);
    } catch (const std::exception& e) {
        out.engine_error = e.what();
    }
    out.wall = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    if (out.ws) out.debug_rounds = ledger_debug_rounds(*out.ws);
    return out;
}

inline StageResult score_case_stage(const CaseRun& run, const BenchCase& c, Stage stage) {
    const StageExpectation& expect = c.stage_specs.at(stage);
    StageResult result;
    if (run.engine_error.empty() && run.ws) {
        // A stage that produced nothing (failed pipeline, aborted ancestors)
        // fails its expectations on its own: locations and keys are absent.
        StageOutputs outputs =
            collect_stage_outputs(*run.ws, run.outcome.dag, run.outcome.run, stage);
        result = score_stage(outputs, expect, stage, c.case_id);
    } else {
        result.case_id = c.case_id;
        result.stage = stage;
        result.passed = false;
        result.fail_reasons.push_back("engine failure: " + run.engine_error);
    }
    result.debug_rounds = run.debug_rounds;
    result.running_time = run.wall;
    return result;
}

inline MetricsReport aggregate(const std::vector<StageResult>& results, MetricsReport::Mode mode,
                               int n_cases) {
    MetricsReport report;
    report.mode = mode;
    report.n_cases = n_cases;
    std::map<Stage, std::vector<const StageResult*>> by_stage;
    for (const auto& r : results) by_stage[r.stage].push_back(&r);
    for (const auto& [stage, rs] : by_stage) {
        StageMetrics m;
        int passed = 0;
        double rounds_sum = 0.0, time_sum = 0.0;
        for (const StageResult* r : rs) {
            passed += r->passed ? 1 : 0;
            rounds_sum += r->debug_rounds;
            m.max_debug_rounds = std::max(m.max_debug_rounds, r->debug_rounds);
            time_sum += static_cast<double>(r->running_time.count());
        }
        m.accuracy = rs.empty() ? 0.0 : static_cast<double>(passed) / rs.size();
        m.mean_debug_rounds = rs.empty() ? 0.0 : rounds_sum / rs.size();
        m.mean_running_time_ms = rs.empty() ? 0.0 : time_sum / rs.size();
        report.per_stage[stage] = m;
    }
    return report;
}

}  // namespace detail

// Each stage of each case runs in isolation; prior-stage inputs come from the
// case bundle's ground truth. Engine failures score the stage as failed and
// the run continues.
inline BenchOutcome run_stage_wise(const std::vector<BenchCase>& cases, const EngineConfig& cfg,
                                   const fs::path& work_base,
                                   const CatalogIndex* global_catalog = nullptr) {
    BenchOutcome out;
    for (const auto& c : cases) {
        for (Stage stage : all_stages()) {
            if (!c.stage_specs.count(stage)) continue;
            std::vector<fs::path> pointers;
            if (stage == Stage::data_preparation) {
                pointers = c.inputs;
            } else {
                Stage prev = stage == Stage::feature_extraction ? Stage::data_preparation
                                                                : Stage::feature_extraction;
                pointers = detail::sorted_files(c.truth_dir(prev));
                if (pointers.empty()) pointers = c.inputs;
            }
            detail::CaseRun run = detail::run_case(
                c, cfg, work_base, c.case_id + "-" + detail::stage_slug(stage),
                detail::scope_of(stage), pointers, global_catalog, to_string(stage));
            out.results.push_back(detail::score_case_stage(run, c, stage));
        }
    }
    out.report = detail::aggregate(out.results, MetricsReport::Mode::stage_wise,
                                   static_cast<int>(cases.size()));
    return out;
}

// One full-pipeline run per case; each stage is scored against its own ground
// truth while downstream stages consume the agent's actual outputs.
inline BenchOutcome run_end_to_end(const std::vector<BenchCase>& cases, const EngineConfig& cfg,
                                   const fs::path& work_base,
                                   const CatalogIndex* global_catalog = nullptr) {
    BenchOutcome out;
    for (const auto& c : cases) {
        detail::CaseRun run =
            detail::run_case(c, cfg, work_base, c.case_id + "-e2e", StageScope::full_pipeline,
                             c.inputs, global_catalog, "end_to_end");
        for (Stage stage : all_stages()) {
            if (!c.stage_specs.count(stage)) continue;
            StageResult r = detail::score_case_stage(run, c, stage);
            // a stage whose nodes never produced outputs scores fail
            out.results.push_back(std::move(r));
        }
    }
    out.report = detail::aggregate(out.results, MetricsReport::Mode::end_to_end,
                                   static_cast<int>(cases.size()));
    return out;
}

}  // namespace geoflow
