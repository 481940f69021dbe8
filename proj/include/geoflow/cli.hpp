#pragma once

// Operator surface: run | bench | index | inspect. Config resolution is
// defaults ⊕ config file ⊕ environment ⊕ flags, rightmost wins.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "geoflow/bench.hpp"
#include "geoflow/config.hpp"
#include "geoflow/core.hpp"
#include "geoflow/pipeline.hpp"
#include "geoflow/retrieval.hpp"

namespace geoflow {

struct CliInvocation {
    enum class Cmd { none, run, bench, index, inspect };
    Cmd cmd = Cmd::none;
    EngineConfig config;

    // run
    std::string task_file;
    std::string task_text;
    std::string task_id = "task";
    std::string domain_hint;
    std::string stage_scope = "full_pipeline";
    std::vector<std::string> data_pointers;
    std::string run_id;

    // bench
    std::string bench_mode = "stage";
    std::string cases_dir;
    std::string report_dir;

    // index
    std::string scripts_dir;
    std::string docs_dir;
    std::string tools_file;
    std::string index_out;
    int chunk_max_chars = 1200;
    int chunk_overlap = 200;
    bool describe_scripts = false;

    // inspect
    std::string inspect_run;
};

// Returns 0 when parsed, 2 on usage errors; help/version print and return -1
// (callers exit 0).
inline int parse_command(const std::vector<std::string>& args, CliInvocation& inv,
                         std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"autonomous Earth-Observation workflow engine"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // parent options may follow the subcommand name

    std::string config_file;
    app.add_option("--config", config_file, "key=value config file");

    // flag staging: collected here, applied after file and env
    std::map<std::string, std::string> staged;
    auto stage_opt = [&](CLI::App* cmd, const std::string& flag, const std::string& key,
                         const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&staged, key](const std::string& v) { staged[key] = v; }, help);
    };
    auto stage_flag = [&](CLI::App* cmd, const std::string& flag, const std::string& key,
                          const std::string& help) {
        cmd->add_flag_function(
            flag, [&staged, key](std::int64_t) { staged[key] = "true"; }, help);
    };
    auto add_engine_options = [&](CLI::App* cmd) {
        stage_opt(cmd, "--backend", "backend", "llm backend: scripted | http");
        stage_opt(cmd, "--fixture", "fixture", "scripted-backend fixture file");
        stage_opt(cmd, "--endpoint", "llm_endpoint", "chat-completions endpoint");
        stage_opt(cmd, "--model", "llm_model", "model name for the http backend");
        stage_opt(cmd, "--max-calls", "max_calls", "total LLM call budget");
        stage_opt(cmd, "--max-debug-rounds", "max_debug_rounds", "revision budget per node");
        stage_opt(cmd, "--probe-attempts", "probe_attempts", "data probe retry budget");
        stage_opt(cmd, "--node-timeout", "node_timeout_s", "sandbox timeout per node (s)");
        stage_opt(cmd, "--case-time-cap", "case_time_cap_s", "bench per-case wall cap (s)");
        stage_opt(cmd, "--plan-candidates", "plan_candidates", "candidate plans per task");
        stage_opt(cmd, "--merge-threshold", "merge_threshold", "plan merge similarity");
        stage_opt(cmd, "--workspace", "workspace_base", "workspace base directory");
        stage_opt(cmd, "--catalog", "catalog_dir", "catalog index directory");
        stage_opt(cmd, "--prompts", "prompts_dir", "prompt template directory");
        stage_opt(cmd, "--interpreter", "interpreter", "sandbox interpreter command");
        stage_flag(cmd, "--disable-data-summary", "disable_data_summary",
                   "skip probing; pass through paths");
        stage_flag(cmd, "--disable-planner", "disable_planner", "single-node degraded DAG");
        stage_flag(cmd, "--disable-checker", "disable_checker", "one-shot execution");
        stage_flag(cmd, "--disable-knowledge", "disable_knowledge", "no knowledge retrieval");
        stage_flag(cmd, "--disable-tools", "disable_tools", "no tool retrieval");
        stage_flag(cmd, "--checker-llm-focus", "checker_llm_focus",
                   "ask the checker role for revision hints");
        stage_flag(cmd, "--parallel-nodes", "parallel_nodes",
                   "run independent branches concurrently");
    };

    CLI::App* run = app.add_subcommand("run", "execute one task instruction");
    run->add_option("--task", inv.task_file, "file holding the task text");
    run->add_option("--text", inv.task_text, "task text given inline");
    run->add_option("--task-id", inv.task_id, "task identifier");
    run->add_option("--domain", inv.domain_hint, "domain hint (urban, agriculture, ...)");
    run->add_option("--scope", inv.stage_scope,
                    "stage scope: data_preparation|feature_extraction|geospatial_analysis|"
                    "full_pipeline");
    run->add_option("--data", inv.data_pointers, "input data paths")->expected(-1);
    run->add_option("--run-id", inv.run_id, "run identifier (default: first free run-<n>)");
    add_engine_options(run);

    CLI::App* bench = app.add_subcommand("bench", "evaluate a benchmark corpus");
    bench->add_option("--mode", inv.bench_mode, "stage | e2e")->required();
    bench->add_option("--cases", inv.cases_dir, "case bundle directory")->required();
    bench->add_option("--report-dir", inv.report_dir, "where report.json/report.txt land");
    add_engine_options(bench);

    CLI::App* index = app.add_subcommand("index", "build the retrieval index");
    index->add_option("--scripts", inv.scripts_dir, "reference script directory");
    index->add_option("--docs", inv.docs_dir, "knowledge document directory");
    index->add_option("--tools", inv.tools_file, "extra catalog entries (JSONL)");
    index->add_option("--out", inv.index_out, "output index directory")->required();
    index->add_option("--chunk-chars", inv.chunk_max_chars, "chunk window size");
    index->add_option("--chunk-overlap", inv.chunk_overlap, "chunk overlap");
    index->add_flag("--describe", inv.describe_scripts,
                    "generate script descriptions with the llm backend");
    add_engine_options(index);

    CLI::App* inspect = app.add_subcommand("inspect", "summarize a recorded run");
    inspect->add_option("--run", inv.inspect_run, "run id under <workspace>/runs")->required();
    add_engine_options(inspect);

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return -1;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }

    if (run->parsed()) inv.cmd = CliInvocation::Cmd::run;
    else if (bench->parsed()) inv.cmd = CliInvocation::Cmd::bench;
    else if (index->parsed()) inv.cmd = CliInvocation::Cmd::index;
    else if (inspect->parsed()) inv.cmd = CliInvocation::Cmd::inspect;
    else {
        err << "a subcommand is required (run | bench | index | inspect)\n" << app.help();
        return 2;
    }

    // precedence: defaults ⊕ file ⊕ env ⊕ flags
    try {
        if (!config_file.empty()) apply_config_file(inv.config, config_file);
        apply_env(inv.config);
        for (const auto& [key, value] : staged) apply_config_value(inv.config, key, value);
    } catch (const GeoflowError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    }

    // conflicting backend selections
    if (inv.config.backend == BackendKind::http && staged.count("fixture")) {
        err << "conflicting backend flags: --fixture belongs to the scripted backend\n";
        return 2;
    }
    if (inv.cmd == CliInvocation::Cmd::run) {
        if (inv.task_file.empty() == inv.task_text.empty()) {
            err << "run needs exactly one of --task or --text\n";
            return 2;
        }
        if (inv.config.backend == BackendKind::scripted && inv.config.fixture_path.empty()) {
            err << "the scripted backend needs --fixture\n";
            return 2;
        }
    }
    if (inv.cmd == CliInvocation::Cmd::bench && inv.bench_mode != "stage" &&
        inv.bench_mode != "e2e") {
        err << "bench --mode must be stage or e2e\n";
        return 2;
    }
    return 0;
}

namespace detail {

inline std::string first_free_name(const fs::path& parent, const std::string& prefix) {
    for (int i = 1;; ++i) {
        std::string name = prefix + "-" + std::to_string(i);
        if (!fs::exists(parent / "runs" / name) && !fs::exists(parent / name)) return name;
    }
}

inline std::string read_task_text(const CliInvocation& inv) {
    if (!inv.task_text.empty()) return inv.task_text;
    std::ifstream in(inv.task_file);
    if (!in.is_open()) throw ParameterError("cannot open task file: " + inv.task_file);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
        text.pop_back();
    return text;
}

inline int dispatch_run(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    EngineConfig cfg = inv.config;
    validate(cfg);
    TaskInstruction task;
    task.id = inv.task_id;
    task.text = read_task_text(inv);
    task.domain_hint = inv.domain_hint;
    task.stage_scope = stage_scope_from_string(inv.stage_scope);

    std::string run_id = inv.run_id.empty()
                             ? first_free_name(cfg.workspace_base, "run")
                             : inv.run_id;
    Workspace ws = create_workspace(run_id, cfg.workspace_base);
    out << "run " << run_id << " -> " << ws.root.string() << "\n";

    CatalogIndex catalog;
    if (!cfg.catalog_dir.empty()) catalog = CatalogIndex::load(cfg.catalog_dir);
    auto gateway = build_gateway(cfg, ws.ledger);

    std::vector<fs::path> pointers;
    for (const auto& p : inv.data_pointers) pointers.push_back(fs::absolute(p));

    PipelineOutcome outcome = run_pipeline(task, pointers, ws, cfg, *gateway,
                                           catalog.size() ? &catalog : nullptr);
    out << "report: " << outcome.report_path.string() << "\n";
    if (outcome.ok) {
        out << "pipeline completed: " << outcome.run.order.size() << " node(s), "
            << outcome.run.total_debug_rounds() << " debug round(s)\n";
        return 0;
    }
    err << "pipeline failed (" << outcome.failure_kind << "): " << outcome.failure_detail
        << "\n";
    return 1;
}

inline int dispatch_bench(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    EngineConfig cfg = inv.config;
    if (cfg.backend == BackendKind::http) validate(cfg);
    auto cases = load_cases(inv.cases_dir);
    out << "loaded " << cases.size() << " case(s) from " << inv.cases_dir << "\n";

    CatalogIndex catalog;
    if (!cfg.catalog_dir.empty()) catalog = CatalogIndex::load(cfg.catalog_dir);
    const CatalogIndex* global = catalog.size() ? &catalog : nullptr;

    fs::path base = cfg.workspace_base;
    fs::create_directories(base);
    fs::path work = base / first_free_name(base, "bench-" + inv.bench_mode);
    BenchOutcome outcome = inv.bench_mode == "stage"
                               ? run_stage_wise(cases, cfg, work, global)
                               : run_end_to_end(cases, cfg, work, global);

    fs::path report_dir = inv.report_dir.empty() ? work : fs::path(inv.report_dir);
    fs::create_directories(report_dir);
    {
        std::ofstream j(report_dir / "report.json");
        j << emit_report(outcome.report, ReportFormat::structured);
        std::ofstream t(report_dir / "report.txt");
        t << emit_report(outcome.report, ReportFormat::text_table);
    }
    out << emit_report(outcome.report, ReportFormat::text_table);
    int failed = 0;
    for (const auto& r : outcome.results) failed += r.passed ? 0 : 1;
    out << failed << " of " << outcome.results.size() << " case-stages failed\n";
    out << "reports: " << (report_dir / "report.json").string() << ", "
        << (report_dir / "report.txt").string() << "\n";
    (void)err;
    return 0;
}

inline std::string derive_description(const fs::path& file, const std::string& body) {
    // first comment line if any, else the stem
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) continue;
        if (line[i] == '#' || line.compare(i, 2, "//") == 0) {
            std::string desc = line.substr(i + (line[i] == '#' ? 1 : 2));
            while (!desc.empty() && std::isspace(static_cast<unsigned char>(desc.front())))
                desc.erase(desc.begin());
            if (!desc.empty()) return desc;
        }
        break;
    }
    return file.stem().string() + " script";
}

inline int dispatch_index(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    CatalogIndex index;
    std::unique_ptr<LlmGateway> gateway;
    if (inv.describe_scripts) {
        EngineConfig cfg = inv.config;
        validate(cfg);
        gateway = build_gateway(cfg, nullptr);
    }

    int scripts = 0, chunks = 0, tools = 0;
    if (!inv.scripts_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(inv.scripts_dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f, std::ios::binary);
            std::string body((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            if (body.empty()) continue;
            CatalogEntry entry;
            entry.entry_id = "script:" + f.stem().string();
            entry.tier = Tier::reference_script;
            entry.body = body;
            entry.provenance = f.string();
            entry.description = gateway ? describe_script(body, *gateway)
                                        : derive_description(f, body);
            index.add(std::move(entry));
            ++scripts;
        }
    }
    if (!inv.docs_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(inv.docs_dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f, std::ios::binary);
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            for (const auto& chunk : chunk_document(text, inv.chunk_max_chars,
                                                    inv.chunk_overlap, f.stem().string())) {
                CatalogEntry entry;
                entry.entry_id = "doc:" + chunk.doc_id + "#" + std::to_string(chunk.ordinal);
                entry.tier = Tier::knowledge_chunk;
                entry.description = chunk.text.substr(0, 200);
                entry.body = chunk.text;
                entry.provenance = f.string();
                index.add(std::move(entry));
                ++chunks;
            }
        }
    }
    if (!inv.tools_file.empty()) {
        std::ifstream in(inv.tools_file);
        if (!in.is_open()) {
            err << "cannot open tools file: " << inv.tools_file << "\n";
            return 1;
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            index.add(catalog_entry_from_json(json::parse(line)));
            ++tools;
        }
    }
    index.save(inv.index_out);
    out << "indexed " << scripts << " script(s), " << chunks << " knowledge chunk(s), " << tools
        << " tool entr" << (tools == 1 ? "y" : "ies") << " -> " << inv.index_out << "\n";
    return 0;
}

inline int dispatch_inspect(const CliInvocation& inv, std::ostream& out, std::ostream&) {
    Workspace ws = open_workspace(inv.config.workspace_base, inv.inspect_run);
    LedgerLoad load = load_ledger(ws);
    out << "run " << inv.inspect_run << ": " << load.events.size() << " event(s)";
    if (load.warnings) out << " (" << load.warnings << " torn line(s) dropped)";
    out << "\n";

    std::map<std::string, int> by_kind;
    std::map<std::string, int> revisions_by_node;
    for (const auto& ev : load.events) {
        by_kind[to_string(ev.kind)] += 1;
        if (ev.kind == EventKind::revision)
            revisions_by_node[ev.payload.value("node_id", "?")] += 1;
    }
    for (const auto& [kind, count] : by_kind) out << "  " << kind << ": " << count << "\n";
    for (const auto& [node, count] : revisions_by_node)
        out << "  debug rounds on " << node << ": " << count << "\n";

    fs::path report = ws.root / "report.json";
    if (fs::exists(report)) {
        std::ifstream in(report);
        json j;
        in >> j;
        out << "pipeline ok: " << (j.value("ok", false) ? "yes" : "no") << "\n";
        if (j.contains("dag")) {
            out << "dag nodes:\n";
            for (const auto& nj : j["dag"]["nodes"])
                out << "  " << nj.value("node_id", "?") << " ["
                    << nj.value("stage", "?") << "] " << nj.value("purpose", "") << "\n";
        }
    }
    return 0;
}

}  // namespace detail

// Exit codes: 0 success, 1 failure-as-data, 2 usage (from parse_command).
inline int main_dispatch(const CliInvocation& inv, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
    try {
        switch (inv.cmd) {
            case CliInvocation::Cmd::run: return detail::dispatch_run(inv, out, err);
            case CliInvocation::Cmd::bench: return detail::dispatch_bench(inv, out, err);
            case CliInvocation::Cmd::index: return detail::dispatch_index(inv, out, err);
            case CliInvocation::Cmd::inspect: return detail::dispatch_inspect(inv, out, err);
            default: err << "no command\n"; return 2;
        }
    } catch (const GeoflowError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace geoflow
