#pragma once

// Builds desk-scale synthetic benchmark cases with scripted fixtures: a 2x2
// input grid, a prep -> feat -> stats chain, and stage expectations derived
// from the same arithmetic the fixture bodies perform.

#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/validation.hpp"

#include "fixture_scripts.hpp"
#include "temp_dir.hpp"

namespace testutil {

using geoflow::json;

// Reads its single input grid, multiplies valid cells by GF_PARAMS["scale"],
// writes its single output grid plus a manifest.
inline std::string scale_node_body() {
    return R"PY(import json, os
ins = [l.split("=", 1) for l in os.environ["GF_INPUTS"].splitlines() if l]
outs = [l.split("=", 1) for l in os.environ["GF_OUTPUTS"].splitlines() if l]
params = json.loads(os.environ.get("GF_PARAMS", "{}"))
scale = float(params.get("scale", 1.0))
src = ins[0][1]
with open(src) as f:
    hdr = {}
    for _ in range(6):
        k, v = f.readline().split()
        hdr[k.lower()] = v
    rows, cols = int(hdr["nrows"]), int(hdr["ncols"])
    nodata = float(hdr["nodata_value"])
    grid = [[float(t) for t in f.readline().split()] for _ in range(rows)]
out_name, out_rel = outs[0]
with open(out_rel, "w") as f:
    f.write("ncols %d\nnrows %d\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value %.10g\n"
            % (cols, rows, nodata))
    for row in grid:
        f.write(" ".join("%.10g" % (v if v == nodata else v * scale) for v in row) + "\n")
json.dump({"artifacts": [{"name": out_name, "path": out_rel, "kind": "raster", "stats": None}],
           "results": None}, open("manifest.json", "w"))
)PY";
}

// Reads its single input grid and reports the mean of valid cells as a
// key-value result.
inline std::string stats_node_body() {
    return R"PY(import json, os
ins = [l.split("=", 1) for l in os.environ["GF_INPUTS"].splitlines() if l]
src = ins[0][1]
with open(src) as f:
    hdr = {}
    for _ in range(6):
        k, v = f.readline().split()
        hdr[k.lower()] = v
    rows = int(hdr["nrows"])
    nodata = float(hdr["nodata_value"])
    vals = []
    for _ in range(rows):
        vals.extend(float(t) for t in f.readline().split())
valid = [v for v in vals if v != nodata]
mean = sum(valid) / len(valid) if valid else 0.0
with open("results.json", "w") as f:
    json.dump({"feat_mean": mean}, f)
json.dump({"artifacts": [{"name": "report", "path": "results.json", "kind": "keyvalue",
                          "stats": None}],
           "results": {"feat_mean": mean}}, open("manifest.json", "w"))
)PY";
}

inline json fixture_json(std::vector<std::string> data_summary, std::vector<std::string> planner,
                         std::vector<std::string> workflow, std::vector<std::string> coder) {
    return json{{"queues",
                 {{"data_summary", data_summary},
                  {"planner", planner},
                  {"workflow", workflow},
                  {"coder", coder}}},
                {"strict", true}};
}

inline json simple_plan(const std::string& id, std::vector<json> steps) {
    return json{{"plan_id", id}, {"steps", steps}};
}

inline json plan_step(const std::string& id, const std::string& desc, const std::string& stage,
                      std::vector<std::string> inputs, std::vector<std::string> outputs) {
    return json{{"step_id", id}, {"description", desc}, {"stage", stage},
                {"required_inputs", inputs}, {"produced_outputs", outputs}};
}

inline json wf_node(const std::string& id, const std::string& stage, const std::string& input,
                    const std::string& output, const std::string& out_kind, json params) {
    return json{{"node_id", id},
                {"purpose", "runs step " + id},
                {"stage", stage},
                {"inputs", {{{"name", input}, {"kind", "raster"}}}},
                {"outputs", {{{"name", output}, {"kind", out_kind}, {"path", output}}}},
                {"params", params}};
}

// ---------------------------------------------------------------------------

// Values of the bundled 2x2 input grid (mean 0.5, no nodata).
inline const std::vector<double>& case_input_cells() {
    static const std::vector<double> cells = {0.2, 0.4, 0.6, 0.8};
    return cells;
}

inline double cells_mean(const std::vector<double>& cells) {
    double sum = 0;
    for (double v : cells) sum += v;
    return sum / static_cast<double>(cells.size());
}

// Full-pipeline cascade case: prep scales by dp_scale (1.0 = correct), feat
// scales by 0.5, stats reports the mean. Expectations always describe the
// CORRECT chain, so dp_scale != 1 fails data_preparation and cascades.
inline void write_full_case(const std::filesystem::path& dir, const std::string& case_id,
                            double dp_scale) {
    namespace fs = std::filesystem;
    using geoflow::AsciiGrid;

    const auto& input = case_input_cells();
    AsciiGrid::write(dir / "data" / "in.asc", 2, 2, input);

    std::vector<double> prep_truth = input;  // correct prep: scale 1.0
    std::vector<double> feat_truth;
    for (double v : prep_truth) feat_truth.push_back(v * 0.5);
    AsciiGrid::write(dir / "truth" / "data_preparation" / "prep.asc", 2, 2, prep_truth);
    AsciiGrid::write(dir / "truth" / "feature_extraction" / "feat.asc", 2, 2, feat_truth);

    const double prep_mean = cells_mean(prep_truth);
    const double feat_mean = cells_mean(feat_truth);

    auto probe = probe_body();
    json params_prep{{"scale", dp_scale}};
    json params_feat{{"scale", 0.5}};

    // per-stage fixtures (plan_candidates must be 1 in the engine config)
    json fx_dp = fixture_json(
        {probe, "a 2x2 scene awaiting preparation"},
        {simple_plan("p1", {plan_step("s1", "prepare the raster", "data_preparation",
                                      {"in.asc"}, {"prep.asc"})})
             .dump()},
        {json{{"nodes", {wf_node("prep", "data_preparation", "in.asc", "prep.asc", "raster",
                                 params_prep)}}}
             .dump()},
        {scale_node_body()});
    json fx_fe = fixture_json(
        {probe, "a prepared raster awaiting feature extraction"},
        {simple_plan("p1", {plan_step("s1", "extract the feature raster", "feature_extraction",
                                      {"prep.asc"}, {"feat.asc"})})
             .dump()},
        {json{{"nodes", {wf_node("feat", "feature_extraction", "prep.asc", "feat.asc", "raster",
                                 params_feat)}}}
             .dump()},
        {scale_node_body()});
    json fx_ga = fixture_json(
        {probe, "a feature raster awaiting analysis"},
        {simple_plan("p1", {plan_step("s1", "report summary statistics", "geospatial_analysis",
                                      {"feat.asc"}, {"report"})})
             .dump()},
        {json{{"nodes", {wf_node("stats", "geospatial_analysis", "feat.asc", "report",
                                 "keyvalue", json::object())}}}
             .dump()},
        {stats_node_body()});
    json fx_e2e = fixture_json(
        {probe, "a 2x2 scene awaiting the full pipeline"},
        {simple_plan("p1", {plan_step("s1", "prepare the raster", "data_preparation",
                                      {"in.asc"}, {"prep.asc"}),
                            plan_step("s2", "extract the feature raster", "feature_extraction",
                                      {"prep.asc"}, {"feat.asc"}),
                            plan_step("s3", "report summary statistics", "geospatial_analysis",
                                      {"feat.asc"}, {"report"})})
             .dump()},
        {json{{"nodes",
               {wf_node("prep", "data_preparation", "in.asc", "prep.asc", "raster", params_prep),
                wf_node("feat", "feature_extraction", "prep.asc", "feat.asc", "raster",
                        params_feat),
                wf_node("stats", "geospatial_analysis", "feat.asc", "report", "keyvalue",
                        json::object())}}}
             .dump()},
        {scale_node_body(), scale_node_body(), stats_node_body()});

    write_file(dir / "fixtures" / "dp.json", fx_dp.dump(2));
    write_file(dir / "fixtures" / "fe.json", fx_fe.dump(2));
    write_file(dir / "fixtures" / "ga.json", fx_ga.dump(2));
    write_file(dir / "fixtures" / "e2e.json", fx_e2e.dump(2));

    json case_doc{
        {"case_id", case_id},
        {"domain", "vegetation"},
        {"instruction",
         {{"id", case_id}, {"text", "run the desk-scale raster chain"},
          {"domain_hint", "vegetation"}, {"stage_scope", "full_pipeline"}}},
        {"inputs", {"data/in.asc"}},
        {"stage_specs",
         {{"data_preparation",
           {{"location_expect", {"prep/prep.asc"}},
            {"numeric_expect",
             {{{"key", "prep.asc.mean"}, {"expected", prep_mean}, {"rel_tol", 1e-9},
               {"abs_tol", 1e-9}}}}}},
          {"feature_extraction",
           {{"location_expect", {"feat/feat.asc"}},
            {"numeric_expect",
             {{{"key", "feat.asc.mean"}, {"expected", feat_mean}, {"rel_tol", 1e-9},
               {"abs_tol", 1e-9}}}}}},
          {"geospatial_analysis",
           {{"numeric_expect",
             {{{"key", "results.feat_mean"}, {"expected", feat_mean}, {"rel_tol", 1e-9},
               {"abs_tol", 1e-9}}}}}}}},
        {"fixtures",
         {{"data_preparation", "fixtures/dp.json"},
          {"feature_extraction", "fixtures/fe.json"},
          {"geospatial_analysis", "fixtures/ga.json"},
          {"end_to_end", "fixtures/e2e.json"}}}};
    write_file(dir / "case.json", case_doc.dump(2));
}

// Single-stage (feature_extraction) case. The expectation pins mean 0.5
// (scale 1.0); `fixture_scale` away from 1.0 makes the stage fail, and
// `coder_failures` crashing bodies precede the working one.
inline void write_single_stage_case(const std::filesystem::path& dir, const std::string& case_id,
                                    double fixture_scale, int coder_failures = 0) {
    using geoflow::AsciiGrid;
    const auto& input = case_input_cells();
    AsciiGrid::write(dir / "data" / "in.asc", 2, 2, input);
    const double expected_mean = cells_mean(input);  // scale 1.0 chain

    std::vector<std::string> coders;
    for (int i = 0; i < coder_failures; ++i) coders.push_back(failing_node_body());
    coders.push_back(scale_node_body());

    json fixture = fixture_json(
        {probe_body(), "one small raster"},
        {simple_plan("p1", {plan_step("s1", "scale the raster", "feature_extraction",
                                      {"in.asc"}, {"out.asc"})})
             .dump()},
        {json{{"nodes", {wf_node("index", "feature_extraction", "in.asc", "out.asc", "raster",
                                 json{{"scale", fixture_scale}})}}}
             .dump()},
        coders);
    write_file(dir / "fixtures" / "fe.json", fixture.dump(2));

    json case_doc{
        {"case_id", case_id},
        {"domain", "agriculture"},
        {"instruction",
         {{"id", case_id}, {"text", "scale the field raster"},
          {"domain_hint", "agriculture"}, {"stage_scope", "feature_extraction"}}},
        {"inputs", {"data/in.asc"}},
        {"stage_specs",
         {{"feature_extraction",
           {{"location_expect", {"index/out.asc"}},
            {"numeric_expect",
             {{{"key", "out.asc.mean"}, {"expected", expected_mean}, {"rel_tol", 1e-9},
               {"abs_tol", 1e-9}}}}}}}},
        {"fixtures", {{"feature_extraction", "fixtures/fe.json"}}}};
    write_file(dir / "case.json", case_doc.dump(2));
}

}  // namespace testutil
