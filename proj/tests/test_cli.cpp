#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "geoflow/cli.hpp"

#include "support/case_builder.hpp"
#include "support/temp_dir.hpp"

using namespace geoflow;
using testutil::TempDir;

namespace {

int parse(std::initializer_list<std::string> args, CliInvocation& inv) {
    std::ostringstream out, err;
    return parse_command(std::vector<std::string>(args), inv, out, err);
}

struct EnvGuard {
    std::string name;
    EnvGuard(const std::string& n, const std::string& value) : name(n) {
        ::setenv(n.c_str(), value.c_str(), 1);
    }
    ~EnvGuard() { ::unsetenv(name.c_str()); }
};

// A fixture + grid + task file for one single-node run.
struct RunSetup {
    TempDir tmp;
    fs::path fixture;
    fs::path task;
    fs::path grid;

    explicit RunSetup(int coder_failures = 0) {
        AsciiGrid::write(tmp / "in.asc", 2, 2, testutil::case_input_cells());
        grid = tmp / "in.asc";
        std::vector<std::string> coders;
        for (int i = 0; i < coder_failures; ++i)
            coders.push_back(testutil::failing_node_body());
        coders.push_back(testutil::scale_node_body());
        json fx = testutil::fixture_json(
            {testutil::probe_body(), "one raster"},
            {testutil::simple_plan("p1", {testutil::plan_step("s1", "scale the raster",
                                                              "feature_extraction", {"in.asc"},
                                                              {"out.asc"})})
                 .dump()},
            {json{{"nodes",
                   {testutil::wf_node("index", "feature_extraction", "in.asc", "out.asc",
                                      "raster", json{{"scale", 1.0}})}}}
                 .dump()},
            coders);
        testutil::write_file(tmp / "fixture.json", fx.dump());
        fixture = tmp / "fixture.json";
        testutil::write_file(tmp / "task.txt", "scale the raster\n");
        task = tmp / "task.txt";
    }

    CliInvocation invocation(int max_debug_rounds = 9) {
        CliInvocation inv;
        REQUIRE(parse({"run", "--task", task.string(), "--backend", "scripted", "--fixture",
                       fixture.string(), "--data", grid.string(), "--workspace",
                       (tmp / "ws").string(), "--plan-candidates", "1", "--max-debug-rounds",
                       std::to_string(max_debug_rounds), "--run-id", "r1"},
                      inv) == 0);
        return inv;
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Parsing and precedence

TEST_CASE("run subcommand parses backend and fixture") {
    CliInvocation inv;
    int rc = parse({"run", "--text", "do things", "--backend", "scripted", "--fixture",
                    "f.json"},
                   inv);
    CHECK(rc == 0);
    CHECK(inv.cmd == CliInvocation::Cmd::run);
    CHECK(inv.config.backend == BackendKind::scripted);
    CHECK(inv.config.fixture_path == "f.json");
}

TEST_CASE("unknown flags are usage errors with exit code 2") {
    CliInvocation inv;
    CHECK(parse({"run", "--text", "x", "--frobnicate"}, inv) == 2);
    CliInvocation inv2;
    CHECK(parse({"definitely-not-a-command"}, inv2) == 2);
    CliInvocation inv3;
    CHECK(parse({}, inv3) == 2);  // missing subcommand
}

TEST_CASE("flags beat environment which beats the config file") {
    TempDir tmp;
    testutil::write_file(tmp / "geoflow.conf", "max_debug_rounds = 2\nmax_calls = 77\n");
    EnvGuard env("GF_MAX_DEBUG_ROUNDS", "3");

    CliInvocation file_env;
    REQUIRE(parse({"run", "--text", "x", "--fixture", "f.json", "--config",
                   (tmp / "geoflow.conf").string()},
                  file_env) == 0);
    CHECK(file_env.config.max_debug_rounds == 3);  // env over file
    CHECK(file_env.config.max_calls == 77);        // file value survives

    CliInvocation with_flag;
    REQUIRE(parse({"run", "--text", "x", "--fixture", "f.json", "--config",
                   (tmp / "geoflow.conf").string(), "--max-debug-rounds", "5"},
                  with_flag) == 0);
    CHECK(with_flag.config.max_debug_rounds == 5);  // flag over env
}

TEST_CASE("conflicting backend flags are a usage error") {
    CliInvocation inv;
    CHECK(parse({"run", "--text", "x", "--backend", "http", "--fixture", "f.json"}, inv) == 2);
}

TEST_CASE("run requires exactly one task source") {
    CliInvocation none;
    CHECK(parse({"run", "--fixture", "f.json"}, none) == 2);
    CliInvocation both;
    CHECK(parse({"run", "--task", "t.txt", "--text", "x", "--fixture", "f.json"}, both) == 2);
}

TEST_CASE("scripted runs demand a fixture") {
    CliInvocation inv;
    CHECK(parse({"run", "--text", "x"}, inv) == 2);
}

TEST_CASE("help returns the sentinel and prints usage") {
    CliInvocation inv;
    std::ostringstream out, err;
    int rc = parse_command({"--help"}, inv, out, err);
    CHECK(rc == -1);
    CHECK(out.str().find("run") != std::string::npos);
    CHECK(out.str().find("bench") != std::string::npos);
}

TEST_CASE("config files reject unknown keys") {
    TempDir tmp;
    testutil::write_file(tmp / "bad.conf", "frobnicate = 1\n");
    CliInvocation inv;
    std::ostringstream out, err;
    CHECK(parse_command({"run", "--text", "x", "--fixture", "f", "--config",
                         (tmp / "bad.conf").string()},
                        inv, out, err) == 2);
}

TEST_CASE("config resolution is reproducible") {
    TempDir tmp;
    testutil::write_file(tmp / "c.conf", "plan_candidates = 2\nmerge_threshold = 0.9\n");
    auto resolve = [&] {
        CliInvocation inv;
        REQUIRE(parse({"run", "--text", "x", "--fixture", "f.json", "--config",
                       (tmp / "c.conf").string()},
                      inv) == 0);
        return inv.config;
    };
    EngineConfig a = resolve();
    EngineConfig b = resolve();
    CHECK(a.plan_candidates == b.plan_candidates);
    CHECK(a.merge_threshold == b.merge_threshold);
    CHECK(a.plan_candidates == 2);
    CHECK(a.merge_threshold == 0.9);
}

// ---------------------------------------------------------------------------
// Dispatch

TEST_CASE("a scripted all-success run exits 0 and populates the workspace") {
    RunSetup setup;
    CliInvocation inv = setup.invocation();
    std::ostringstream out, err;
    int rc = main_dispatch(inv, out, err);
    CHECK(rc == 0);
    fs::path run_root = setup.tmp / "ws" / "runs" / "r1";
    CHECK(fs::exists(run_root / "ledger.jsonl"));
    CHECK(fs::exists(run_root / "report.json"));
    CHECK(fs::exists(run_root / "nodes" / "index" / "out.asc"));
    CHECK(fs::exists(run_root / "nodes" / "index" / "manifest.json"));
    CHECK(out.str().find("pipeline completed") != std::string::npos);
}

TEST_CASE("an always-failing coder exits 1 with max_debug_rounds revisions") {
    RunSetup setup(99);  // more failing bodies than the loop will consume
    const int rounds = 3;
    CliInvocation inv = setup.invocation(rounds);
    std::ostringstream out, err;
    int rc = main_dispatch(inv, out, err);
    CHECK(rc == 1);
    auto load = load_ledger_file(setup.tmp / "ws" / "runs" / "r1" / "ledger.jsonl");
    int revisions = 0;
    for (const auto& ev : load.events)
        if (ev.kind == EventKind::revision) ++revisions;
    CHECK(revisions == rounds);
}

TEST_CASE("duplicate run ids are refused") {
    RunSetup setup;
    CliInvocation inv = setup.invocation();
    std::ostringstream out, err;
    REQUIRE(main_dispatch(inv, out, err) == 0);
    RunSetup setup2;  // fresh fixture, same workspace+run id
    CliInvocation again = setup.invocation();
    again.config.fixture_path = setup2.fixture.string();
    std::ostringstream out2, err2;
    CHECK(main_dispatch(again, out2, err2) == 1);
    CHECK(err2.str().find("run exists") != std::string::npos);
}

TEST_CASE("bench over a corpus exits 0 and writes both report files") {
    TempDir tmp;
    testutil::write_single_stage_case(tmp / "cases" / "c1", "c1", 1.0);
    testutil::write_single_stage_case(tmp / "cases" / "c2", "c2", 1.8);
    CliInvocation inv;
    REQUIRE(parse({"bench", "--mode", "stage", "--cases", (tmp / "cases").string(),
                   "--workspace", (tmp / "ws").string(), "--report-dir",
                   (tmp / "reports").string(), "--plan-candidates", "1"},
                  inv) == 0);
    std::ostringstream out, err;
    int rc = main_dispatch(inv, out, err);
    CHECK(rc == 0);  // failures are data
    CHECK(fs::exists(tmp / "reports" / "report.json"));
    CHECK(fs::exists(tmp / "reports" / "report.txt"));
    CHECK(out.str().find("50.00") != std::string::npos);

    auto j = json::parse(testutil::read_file(tmp / "reports" / "report.json"));
    CHECK(j.at("per_stage").at("feature_extraction").at("accuracy") == 0.5);
}

TEST_CASE("bench harness errors exit 1") {
    TempDir tmp;
    CliInvocation inv;
    REQUIRE(parse({"bench", "--mode", "stage", "--cases", (tmp / "missing").string()}, inv) ==
            0);
    std::ostringstream out, err;
    CHECK(main_dispatch(inv, out, err) == 1);
}

TEST_CASE("index ingests scripts, docs and tool entries") {
    TempDir tmp;
    testutil::write_file(tmp / "scripts" / "ndvi.py", "# computes ndvi per pixel\nx = 1\n");
    testutil::write_file(tmp / "scripts" / "water.py", "print('water extent')\n");
    std::string doc(3000, 'd');
    testutil::write_file(tmp / "docs" / "sensors.txt", doc);
    json tool{{"entry_id", "segment"},
              {"tier", "external_command"},
              {"description", "segmentation stand-in"},
              {"body", "python3 seg.py {input} {output}"},
              {"provenance", "bundled"}};
    testutil::write_file(tmp / "tools.jsonl", tool.dump() + "\n");

    CliInvocation inv;
    REQUIRE(parse({"index", "--scripts", (tmp / "scripts").string(), "--docs",
                   (tmp / "docs").string(), "--tools", (tmp / "tools.jsonl").string(), "--out",
                   (tmp / "index").string()},
                  inv) == 0);
    std::ostringstream out, err;
    CHECK(main_dispatch(inv, out, err) == 0);
    CHECK(fs::exists(tmp / "index" / "reference_script.jsonl"));
    CHECK(fs::exists(tmp / "index" / "knowledge_chunk.jsonl"));
    CHECK(fs::exists(tmp / "index" / "external_command.jsonl"));

    CatalogIndex index = CatalogIndex::load(tmp / "index");
    auto hits = index.query_top_k("computes ndvi per pixel", 1, Tier::reference_script);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].entry_id == "script:ndvi");
    CHECK(index.find("segment") != nullptr);
    // the 3000-char doc chunks into 1200-char windows with 200 overlap
    CHECK(index.by_tier(Tier::knowledge_chunk).size() == 3);
}

TEST_CASE("inspect summarizes a recorded run") {
    RunSetup setup;
    CliInvocation inv = setup.invocation();
    std::ostringstream out, err;
    REQUIRE(main_dispatch(inv, out, err) == 0);

    CliInvocation inspect;
    REQUIRE(parse({"inspect", "--run", "r1", "--workspace", (setup.tmp / "ws").string()},
                  inspect) == 0);
    std::ostringstream iout, ierr;
    CHECK(main_dispatch(inspect, iout, ierr) == 0);
    CHECK(iout.str().find("llm_call") != std::string::npos);
    CHECK(iout.str().find("pipeline ok: yes") != std::string::npos);
    CHECK(iout.str().find("index [feature_extraction]") != std::string::npos);

    CliInvocation missing;
    REQUIRE(parse({"inspect", "--run", "ghost", "--workspace",
                   (setup.tmp / "ws").string()},
                  missing) == 0);
    std::ostringstream mout, merr;
    CHECK(main_dispatch(missing, mout, merr) == 1);
}

// ---------------------------------------------------------------------------
// Ablation switches via config

TEST_CASE("disable_checker turns the run into one-shot execution") {
    RunSetup setup(1);  // one failure, then a good body the loop never reaches
    CliInvocation inv = setup.invocation();
    inv.config.disable_checker = true;
    std::ostringstream out, err;
    CHECK(main_dispatch(inv, out, err) == 1);
    auto load = load_ledger_file(setup.tmp / "ws" / "runs" / "r1" / "ledger.jsonl");
    for (const auto& ev : load.events) CHECK(ev.kind != EventKind::revision);
}

TEST_CASE("disable_planner still completes over the single-node degraded path") {
    TempDir tmp;
    AsciiGrid::write(tmp / "in.asc", 2, 2, testutil::case_input_cells());
    // single generic node: no planner/workflow fixtures consumed
    json fx = testutil::fixture_json({testutil::probe_body(), "one raster"}, {}, {},
                                     {testutil::generic_node_body()});
    testutil::write_file(tmp / "fixture.json", fx.dump());
    testutil::write_file(tmp / "task.txt", "summarize the raster\n");

    CliInvocation inv;
    REQUIRE(parse({"run", "--task", (tmp / "task.txt").string(), "--fixture",
                   (tmp / "fixture.json").string(), "--data", (tmp / "in.asc").string(),
                   "--workspace", (tmp / "ws").string(), "--run-id", "r1",
                   "--disable-planner"},
                  inv) == 0);
    std::ostringstream out, err;
    CHECK(main_dispatch(inv, out, err) == 0);
    CHECK(fs::exists(tmp / "ws" / "runs" / "r1" / "nodes" / "task" / "manifest.json"));
}

TEST_CASE("disable_data_summary passes through paths without probing") {
    TempDir tmp;
    AsciiGrid::write(tmp / "in.asc", 2, 2, testutil::case_input_cells());
    json fx = testutil::fixture_json({}, {}, {}, {testutil::generic_node_body()});
    testutil::write_file(tmp / "fixture.json", fx.dump());

    CliInvocation inv;
    REQUIRE(parse({"run", "--text", "summarize", "--fixture", (tmp / "fixture.json").string(),
                   "--data", (tmp / "in.asc").string(), "--workspace", (tmp / "ws").string(),
                   "--run-id", "r1", "--disable-data-summary", "--disable-planner"},
                  inv) == 0);
    std::ostringstream out, err;
    CHECK(main_dispatch(inv, out, err) == 0);
    auto load = load_ledger_file(tmp / "ws" / "runs" / "r1" / "ledger.jsonl");
    for (const auto& ev : load.events) CHECK(ev.kind != EventKind::probe_attempt);
}
