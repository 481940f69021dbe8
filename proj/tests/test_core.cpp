#include <catch2/catch_amalgamated.hpp>

#include "geoflow/core.hpp"

#include "support/temp_dir.hpp"

using namespace geoflow;
using testutil::TempDir;

TEST_CASE("create_workspace lays out the run directory") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    CHECK(ws.root == tmp.path() / "runs" / "r1");
    CHECK(fs::exists(ws.root / "nodes"));
    CHECK(fs::exists(ws.root / "profile"));
    CHECK(fs::exists(ws.root / "ledger.jsonl"));
    CHECK(ws.node_dirs.empty());
}

TEST_CASE("create_workspace rejects an existing run") {
    TempDir tmp;
    create_workspace("r1", tmp.path());
    CHECK_THROWS_AS(create_workspace("r1", tmp.path()), WorkspaceError);
    CHECK_THROWS_WITH(create_workspace("r1", tmp.path()), Catch::Matchers::ContainsSubstring("run exists"));
}

TEST_CASE("two runs under one base get disjoint roots") {
    TempDir tmp;
    Workspace a = create_workspace("a", tmp.path());
    Workspace b = create_workspace("b", tmp.path());
    CHECK(a.root != b.root);
    auto a_str = a.root.string();
    auto b_str = b.root.string();
    CHECK(b_str.rfind(a_str + "/", 0) != 0);
    CHECK(a_str.rfind(b_str + "/", 0) != 0);
}

TEST_CASE("node directories stay under the workspace root") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    fs::path nd = ws.node_dir("n1");
    CHECK(nd == ws.nodes_dir() / "n1");
    CHECK_THROWS_AS(ws.node_dir("../evil"), ParameterError);
    CHECK_THROWS_AS(ws.node_dir("a/b"), ParameterError);
    CHECK_THROWS_AS(create_workspace("../oops", tmp.path()), ParameterError);
}

TEST_CASE("append_event assigns dense increasing sequence numbers") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    LedgerEvent first;
    first.kind = EventKind::execution;
    CHECK(append_event(ws, first) == 1);
    for (std::uint64_t i = 2; i <= 100; ++i) {
        LedgerEvent ev;
        ev.kind = EventKind::execution;
        ev.payload = {{"i", i}};
        CHECK(append_event(ws, ev) == i);
    }
    auto load = load_ledger(ws);
    REQUIRE(load.events.size() == 100);
    for (std::size_t i = 0; i < load.events.size(); ++i) CHECK(load.events[i].seq == i + 1);
    CHECK(load.warnings == 0);
}

TEST_CASE("sequence numbers continue from the persisted max after reload") {
    TempDir tmp;
    {
        Workspace ws = create_workspace("r1", tmp.path());
        for (int i = 0; i < 3; ++i) {
            LedgerEvent ev;
            ws.ledger->append(ev);
        }
    }
    Workspace again = open_workspace(tmp.path(), "r1");
    LedgerEvent ev;
    CHECK(again.ledger->append(ev) == 4);
}

TEST_CASE("load_ledger on an empty file returns nothing") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    auto load = load_ledger(ws);
    CHECK(load.events.empty());
    CHECK(load.warnings == 0);
}

TEST_CASE("load_ledger drops a torn trailing line with a warning") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    for (int i = 0; i < 5; ++i) {
        LedgerEvent ev;
        ev.payload = {{"i", i}};
        ws.ledger->append(ev);
    }
    // Truncate the file mid-way through the final record.
    std::string content = testutil::read_file(ws.ledger_path());
    auto last_newline = content.rfind('\n');
    auto second_last = content.rfind('\n', last_newline - 1);
    std::string torn = content.substr(0, second_last + 1 + 10);
    testutil::write_file(ws.ledger_path(), torn);

    auto load = load_ledger(ws);
    CHECK(load.events.size() == 4);
    CHECK(load.warnings == 1);
}

TEST_CASE("load_ledger flags a malformed interior line as corruption") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    for (int i = 0; i < 3; ++i) {
        LedgerEvent ev;
        ws.ledger->append(ev);
    }
    std::string content = testutil::read_file(ws.ledger_path());
    auto first_newline = content.find('\n');
    std::string corrupted = "{this is not json\n" + content.substr(first_newline + 1);
    testutil::write_file(ws.ledger_path(), corrupted);
    CHECK_THROWS_AS(load_ledger(ws), CorruptLedger);
}

TEST_CASE("ledger round-trips n appends in order") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    const int n = GENERATE(1, 7, 25);
    std::vector<std::string> kinds;
    for (int i = 0; i < n; ++i) {
        LedgerEvent ev;
        ev.kind = (i % 2 == 0) ? EventKind::execution : EventKind::validation;
        ev.stage = Stage::feature_extraction;
        ev.payload = {{"i", i}};
        ws.ledger->append(ev);
        kinds.push_back(to_string(ev.kind));
    }
    auto load = load_ledger(ws);
    REQUIRE(static_cast<int>(load.events.size()) == n);
    for (int i = 0; i < n; ++i) {
        CHECK(load.events[i].payload.at("i").get<int>() == i);
        CHECK(to_string(load.events[i].kind) == kinds[i]);
        CHECK(load.events[i].stage == Stage::feature_extraction);
    }
}

TEST_CASE("ledger line schema matches the pinned field set") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    LedgerEvent ev;
    ev.stage = Stage::geospatial_analysis;
    ev.kind = EventKind::plan_selected;
    ev.payload = {{"plan_id", "p1"}};
    ws.ledger->append(ev);
    std::string content = testutil::read_file(ws.ledger_path());
    auto j = json::parse(content.substr(0, content.find('\n')));
    CHECK(j.at("seq") == 1);
    CHECK(j.contains("ts_wall"));
    CHECK(j.contains("ts_mono_ns"));
    CHECK(j.at("stage") == "geospatial_analysis");
    CHECK(j.at("kind") == "plan_selected");
    CHECK(j.at("payload").at("plan_id") == "p1");
    CHECK(j.size() == 6);
}

TEST_CASE("stage labels are a closed three-value set") {
    CHECK(all_stages().size() == 3);
    CHECK(stage_from_string("data_preparation") == Stage::data_preparation);
    CHECK(stage_from_string("feature_extraction") == Stage::feature_extraction);
    CHECK(stage_from_string("geospatial_analysis") == Stage::geospatial_analysis);
    CHECK_THROWS_AS(stage_from_string("full_pipeline"), ParseError);
}

TEST_CASE("workspace rel() keeps payload paths run-relative") {
    TempDir tmp;
    Workspace ws = create_workspace("r1", tmp.path());
    CHECK(ws.rel(ws.nodes_dir() / "n1" / "out.asc") == "nodes/n1/out.asc");
    // Paths outside the workspace stay absolute.
    CHECK(ws.rel("/etc/hosts") == "/etc/hosts");
}
