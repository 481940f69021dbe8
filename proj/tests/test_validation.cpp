#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "geoflow/validation.hpp"

#include "support/temp_dir.hpp"

using namespace geoflow;
using testutil::TempDir;

namespace {

// Two-pass oracle: min/max first, then the mean from a fresh accumulation.
// Works directly on the text file, independent of AsciiGrid.
struct OracleStats {
    double min, max, mean, nodata_fraction;
    long valid;
};

OracleStats two_pass_stats(const fs::path& path) {
    auto read_cells = [&](std::vector<double>& cells, double& nodata) {
        std::ifstream in(path);
        std::string key;
        double value;
        nodata = -9999;
        for (int i = 0; i < 6; ++i) {
            in >> key >> value;
            std::string k;
            for (char c : key) k += static_cast<char>(std::tolower(c));
            if (k == "nodata_value") nodata = value;
        }
        double v;
        while (in >> v) cells.push_back(v);
    };
    std::vector<double> cells;
    double nodata;
    read_cells(cells, nodata);

    OracleStats s{0, 0, 0, 0, 0};
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : cells) {
        if (v == nodata) continue;
        s.valid++;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double sum = 0;
    for (double v : cells)
        if (v != nodata) sum += v;
    s.min = lo;
    s.max = hi;
    s.mean = s.valid ? sum / s.valid : std::numeric_limits<double>::quiet_NaN();
    s.nodata_fraction = cells.empty() ? 0.0 : 1.0 - double(s.valid) / cells.size();
    return s;
}

std::string grid_text_2x2(const std::string& cells) {
    return "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value -9999\n" +
           cells;
}

ArtifactManifest manifest_with(const std::string& name, const std::string& path,
                               const std::string& kind,
                               std::optional<RasterStats> stats = std::nullopt) {
    ArtifactManifest m;
    Artifact a;
    a.name = name;
    a.path = path;
    a.kind = kind;
    a.stats = stats;
    m.artifacts.push_back(a);
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// ASCII grid reader

TEST_CASE("2x2 grid stats are exact") {
    TempDir tmp;
    testutil::write_file(tmp / "g.asc", grid_text_2x2("1 2\n3 4\n"));
    AsciiGrid g = read_ascii_grid(tmp / "g.asc");
    RasterStats s = g.stats();
    CHECK(s.rows == 2);
    CHECK(s.cols == 2);
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    CHECK(s.mean == 2.5);
    CHECK(s.nodata_fraction == 0.0);
    CHECK(g.at(0, 1) == 2.0);
    CHECK(g.at(1, 0) == 3.0);
}

TEST_CASE("all-NODATA grid marks stats undefined") {
    TempDir tmp;
    testutil::write_file(tmp / "g.asc", grid_text_2x2("-9999 -9999\n-9999 -9999\n"));
    RasterStats s = read_ascii_grid(tmp / "g.asc").stats();
    CHECK(s.nodata_fraction == 1.0);
    CHECK(std::isnan(s.min));
    CHECK(std::isnan(s.max));
    CHECK(std::isnan(s.mean));
    CHECK_FALSE(s.has_valid_cells());
}

TEST_CASE("header keys are case-insensitive and tolerate whitespace runs") {
    TempDir tmp;
    testutil::write_file(tmp / "g.asc",
                         "NCOLS   2\nNrows\t2\nXLLCORNER 0\nyllcorner 0\nCellSize 30\n"
                         "nodata_VALUE -9999\n1 2\n3 4\n");
    AsciiGrid g = read_ascii_grid(tmp / "g.asc");
    CHECK(g.rows() == 2);
    CHECK(g.cellsize() == 30.0);
}

TEST_CASE("malformed header reports the line") {
    TempDir tmp;
    testutil::write_file(tmp / "g.asc", "ncols 2\nnrows x\n");
    try {
        read_ascii_grid(tmp / "g.asc");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("row length mismatch is a parse error") {
    TempDir tmp;
    testutil::write_file(tmp / "short.asc", grid_text_2x2("1 2\n3\n"));
    CHECK_THROWS_AS(read_ascii_grid(tmp / "short.asc"), ParseError);
    testutil::write_file(tmp / "long.asc", grid_text_2x2("1 2\n3 4 5\n"));
    CHECK_THROWS_AS(read_ascii_grid(tmp / "long.asc"), ParseError);
}

TEST_CASE("non-numeric cell is a parse error") {
    TempDir tmp;
    testutil::write_file(tmp / "g.asc", grid_text_2x2("1 2\n3 oops\n"));
    CHECK_THROWS_AS(read_ascii_grid(tmp / "g.asc"), ParseError);
}

TEST_CASE("missing header key is rejected") {
    TempDir tmp;
    testutil::write_file(tmp / "g.asc",
                         "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n1 2\n3 4\n");
    CHECK_THROWS_AS(read_ascii_grid(tmp / "g.asc"), ParseError);
}

TEST_CASE("random grid stats match the two-pass oracle") {
    TempDir tmp;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> value(-50.0, 120.0);
    std::bernoulli_distribution hole(0.15);
    const int rows = 100, cols = 100;
    std::vector<double> cells;
    cells.reserve(rows * cols);
    for (int i = 0; i < rows * cols; ++i) cells.push_back(hole(rng) ? -9999.0 : value(rng));
    AsciiGrid::write(tmp / "r.asc", rows, cols, cells);

    RasterStats got = read_ascii_grid(tmp / "r.asc").stats();
    OracleStats expect = two_pass_stats(tmp / "r.asc");
    CHECK(got.min == Catch::Approx(expect.min).epsilon(1e-12));
    CHECK(got.max == Catch::Approx(expect.max).epsilon(1e-12));
    CHECK(got.mean == Catch::Approx(expect.mean).epsilon(1e-12));
    CHECK(got.nodata_fraction == Catch::Approx(expect.nodata_fraction).epsilon(1e-12));
}

TEST_CASE("write/read round-trip preserves cells") {
    TempDir tmp;
    std::vector<double> cells = {0.125, -3.5, 42.0, 1e-7, 99999.5, -9999.0};
    AsciiGrid::write(tmp / "g.asc", 2, 3, cells, -9999.0, 10.5, -4.25, 15.0);
    AsciiGrid g = read_ascii_grid(tmp / "g.asc");
    CHECK(g.cells() == cells);
    CHECK(g.xllcorner() == 10.5);
    CHECK(g.yllcorner() == -4.25);
    CHECK(g.is_nodata(1, 2));
}

// ---------------------------------------------------------------------------
// Rule engine

TEST_CASE("NDVI exceeding its analytic range fails value_range") {
    TempDir tmp;
    // (NIR-R)/(NIR+R) can never exceed 1; a max of 1.5 is a logic error.
    AsciiGrid::write(tmp / "ndvi.asc", 2, 2, {0.2, 0.4, 1.5, 0.9});
    auto manifest = manifest_with("ndvi", "ndvi.asc", "raster");
    ValidationRule rule{"ndvi:range", RuleKind::value_range,
                        json{{"artifact", "ndvi"}, {"lo", -1.0}, {"hi", 1.0}}};
    auto report = evaluate_rules(manifest, {rule}, tmp.path());
    CHECK_FALSE(report.pass);
    REQUIRE(report.failures.size() == 1);
    CHECK(report.failures[0].second.find("out of logical range") != std::string::npos);
}

TEST_CASE("an all-invalid artifact fails invalid_fraction_max") {
    TempDir tmp;
    AsciiGrid::write(tmp / "x.asc", 2, 2, {-9999, -9999, -9999, -9999});
    auto manifest = manifest_with("x", "x.asc", "raster");
    ValidationRule rule{"x:invalid", RuleKind::invalid_fraction_max,
                        json{{"artifact", "x"}, {"threshold", 0.99}}};
    auto report = evaluate_rules(manifest, {rule}, tmp.path());
    CHECK_FALSE(report.pass);
}

TEST_CASE("a clean artifact passes all default rules") {
    TempDir tmp;
    AsciiGrid::write(tmp / "ndvi.asc", 2, 2, {0.1, 0.5, -0.25, 0.75});
    auto manifest = manifest_with("ndvi", "ndvi.asc", "ndvi");
    auto rules = default_rules_for("ndvi", "ndvi");
    auto report = evaluate_rules(manifest, rules, tmp.path());
    CHECK(report.pass);
    CHECK(report.failures.empty());
    CHECK(report.checked == 3);
}

TEST_CASE("rules referencing a missing artifact fail instead of throwing") {
    TempDir tmp;
    ArtifactManifest manifest;  // empty
    ValidationRule rule{"r", RuleKind::value_range,
                        json{{"artifact", "ghost"}, {"lo", 0.0}, {"hi", 1.0}}};
    auto report = evaluate_rules(manifest, {rule}, tmp.path());
    CHECK_FALSE(report.pass);
    CHECK(report.failures[0].second.find("artifact missing") != std::string::npos);
}

TEST_CASE("artifact_exists fails when the file is gone") {
    TempDir tmp;
    auto manifest = manifest_with("out", "nowhere.asc", "raster");
    ValidationRule rule{"out:exists", RuleKind::artifact_exists, json{{"artifact", "out"}}};
    auto report = evaluate_rules(manifest, {rule}, tmp.path());
    CHECK_FALSE(report.pass);
}

TEST_CASE("all failures are collected, not just the first") {
    TempDir tmp;
    AsciiGrid::write(tmp / "bad.asc", 2, 2, {5.0, -9999, -9999, -9999});
    auto manifest = manifest_with("bad", "bad.asc", "raster");
    std::vector<ValidationRule> rules = {
        {"r1", RuleKind::value_range, json{{"artifact", "bad"}, {"lo", -1.0}, {"hi", 1.0}}},
        {"r2", RuleKind::invalid_fraction_max, json{{"artifact", "bad"}, {"threshold", 0.5}}},
        {"r3", RuleKind::artifact_exists, json{{"artifact", "ghost"}}},
    };
    auto report = evaluate_rules(manifest, rules, tmp.path());
    CHECK_FALSE(report.pass);
    CHECK(report.failures.size() == 3);
    CHECK(report.checked == 3);
}

TEST_CASE("value_range on an all-nodata raster is vacuous") {
    TempDir tmp;
    AsciiGrid::write(tmp / "v.asc", 1, 2, {-9999, -9999});
    auto manifest = manifest_with("v", "v.asc", "raster");
    ValidationRule rule{"r", RuleKind::value_range,
                        json{{"artifact", "v"}, {"lo", 0.0}, {"hi", 1.0}}};
    CHECK(evaluate_rules(manifest, {rule}, tmp.path()).pass);
}

TEST_CASE("manifest stats back rules when no readable grid exists") {
    TempDir tmp;
    testutil::write_file(tmp / "blob.bin", "not a grid");
    RasterStats claimed;
    claimed.rows = 4;
    claimed.cols = 4;
    claimed.min = 0.0;
    claimed.max = 2.0;
    claimed.mean = 1.0;
    auto manifest = manifest_with("blob", "blob.bin", "raster", claimed);
    ValidationRule rule{"r", RuleKind::value_range,
                        json{{"artifact", "blob"}, {"lo", -1.0}, {"hi", 1.0}}};
    auto report = evaluate_rules(manifest, {rule}, tmp.path());
    CHECK_FALSE(report.pass);  // claimed max 2.0 breaks the range
}

TEST_CASE("stats are recomputed from disk in preference to the manifest") {
    TempDir tmp;
    AsciiGrid::write(tmp / "a.asc", 1, 2, {0.5, 0.7});
    RasterStats lie;
    lie.min = -5;
    lie.max = 5;  // manifest lies; the file is clean
    auto manifest = manifest_with("a", "a.asc", "raster", lie);
    ValidationRule rule{"r", RuleKind::value_range,
                        json{{"artifact", "a"}, {"lo", -1.0}, {"hi", 1.0}}};
    CHECK(evaluate_rules(manifest, {rule}, tmp.path()).pass);
}

TEST_CASE("metadata_match compares dimensions and crs") {
    TempDir tmp;
    AsciiGrid::write(tmp / "m.asc", 2, 3, {1, 2, 3, 4, 5, 6});
    auto manifest = manifest_with("m", "m.asc", "raster");
    ValidationRule good{"meta", RuleKind::metadata_match,
                        json{{"artifact", "m"}, {"expect", {{"rows", 2}, {"cols", 3}}}}};
    CHECK(evaluate_rules(manifest, {good}, tmp.path()).pass);
    ValidationRule bad{"meta", RuleKind::metadata_match,
                       json{{"artifact", "m"}, {"expect", {{"rows", 9}}}}};
    CHECK_FALSE(evaluate_rules(manifest, {bad}, tmp.path()).pass);
}

TEST_CASE("keyvalue_tolerance checks the results block") {
    TempDir tmp;
    ArtifactManifest manifest;
    manifest.results = json{{"ndvi_mean", 0.4205}};
    ValidationRule rule{"kv", RuleKind::keyvalue_tolerance,
                        json{{"key", "ndvi_mean"}, {"expected", 0.42}, {"rel_tol", 0.01}}};
    CHECK(evaluate_rules(manifest, {rule}, tmp.path()).pass);

    ValidationRule tight{"kv", RuleKind::keyvalue_tolerance,
                         json{{"key", "ndvi_mean"}, {"expected", 0.42},
                              {"rel_tol", 1e-6}, {"abs_tol", 1e-9}}};
    CHECK_FALSE(evaluate_rules(manifest, {tight}, tmp.path()).pass);

    ValidationRule missing{"kv", RuleKind::keyvalue_tolerance,
                           json{{"key", "nope"}, {"expected", 1.0}}};
    CHECK_FALSE(evaluate_rules(manifest, {missing}, tmp.path()).pass);
}

TEST_CASE("evaluation is pure: repeated runs yield identical reports") {
    TempDir tmp;
    AsciiGrid::write(tmp / "ndvi.asc", 2, 2, {0.2, 1.4, -9999, 0.3});
    auto manifest = manifest_with("ndvi", "ndvi.asc", "ndvi");
    auto rules = default_rules_for("ndvi", "ndvi");
    auto a = evaluate_rules(manifest, rules, tmp.path());
    auto b = evaluate_rules(manifest, rules, tmp.path());
    CHECK(a.pass == b.pass);
    CHECK(a.failures == b.failures);
    CHECK(a.checked == b.checked);
}

// ---------------------------------------------------------------------------
// Default rule table

TEST_CASE("ndvi defaults include the analytic range") {
    auto rules = default_rules_for("ndvi");
    REQUIRE(rules.size() == 3);
    bool has_range = false;
    for (const auto& r : rules) {
        if (r.kind == RuleKind::value_range) {
            has_range = true;
            CHECK(r.params.at("lo") == -1.0);
            CHECK(r.params.at("hi") == 1.0);
        }
    }
    CHECK(has_range);
}

TEST_CASE("ndsi shares the normalized-difference family") {
    auto ndsi = default_rules_for("ndsi");
    auto ndvi = default_rules_for("ndvi");
    REQUIRE(ndsi.size() == ndvi.size());
    for (std::size_t i = 0; i < ndsi.size(); ++i) CHECK(ndsi[i].kind == ndvi[i].kind);
}

TEST_CASE("unknown kinds get an existence rule only") {
    auto rules = default_rules_for("unknown_thing");
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].kind == RuleKind::artifact_exists);
}

TEST_CASE("classification kinds honor a class-id range suffix") {
    auto rules = default_rules_for("classification:0-5", "landcover");
    REQUIRE(rules.size() == 3);
    CHECK(rules[0].kind == RuleKind::value_range);
    CHECK(rules[0].params.at("lo") == 0.0);
    CHECK(rules[0].params.at("hi") == 5.0);
    CHECK(rules[0].params.at("artifact") == "landcover");
}

TEST_CASE("keyvalue kinds require the results block") {
    auto rules = default_rules_for("keyvalue", "stats");
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].params.at("artifact") == "results");
}

TEST_CASE("rule files round-trip") {
    TempDir tmp;
    json list = json::array();
    list.push_back(to_json(ValidationRule{"a", RuleKind::value_range,
                                          json{{"artifact", "x"}, {"lo", 0.0}, {"hi", 1.0}}}));
    list.push_back(to_json(
        ValidationRule{"b", RuleKind::artifact_exists, json{{"artifact", "x"}}}));
    testutil::write_file(tmp / "rules.json", list.dump());
    auto rules = rules_from_file(tmp / "rules.json");
    REQUIRE(rules.size() == 2);
    CHECK(rules[0].rule_id == "a");
    CHECK(rules[1].kind == RuleKind::artifact_exists);
}

TEST_CASE("rule invariants are validated") {
    CHECK_THROWS_AS(rule_from_json(json{{"rule_id", "r"},
                                        {"kind", "value_range"},
                                        {"params", {{"artifact", "x"}, {"lo", 2.0}, {"hi", 1.0}}}}),
                    ParameterError);
    CHECK_THROWS_AS(rule_from_json(json{{"rule_id", "r"},
                                        {"kind", "invalid_fraction_max"},
                                        {"params", {{"artifact", "x"}, {"threshold", 1.5}}}}),
                    ParameterError);
}

// ---------------------------------------------------------------------------
// Manifest parsing

TEST_CASE("manifest json round-trips") {
    ArtifactManifest m;
    Artifact a;
    a.name = "ndvi";
    a.path = "ndvi.asc";
    a.kind = "raster";
    RasterStats s;
    s.rows = 2;
    s.cols = 2;
    s.min = 0;
    s.max = 1;
    s.mean = 0.5;
    a.stats = s;
    m.artifacts.push_back(a);
    m.results = json{{"mean", 0.5}};
    auto j = to_json(m);
    auto back = manifest_from_json(j);
    REQUIRE(back.artifacts.size() == 1);
    CHECK(back.artifacts[0].name == "ndvi");
    REQUIRE(back.artifacts[0].stats.has_value());
    CHECK(back.artifacts[0].stats->mean == 0.5);
    CHECK(back.results.at("mean") == 0.5);
}

TEST_CASE("load_manifest tolerates absence and garbage") {
    TempDir tmp;
    CHECK_FALSE(load_manifest(tmp.path()).has_value());
    testutil::write_file(tmp / "manifest.json", "{broken");
    CHECK_FALSE(load_manifest(tmp.path()).has_value());
    testutil::write_file(tmp / "manifest.json",
                         json{{"artifacts", json::array()}, {"results", nullptr}}.dump());
    CHECK(load_manifest(tmp.path()).has_value());
}
