// Generates the bundled desk-scale benchmark corpus (cases/) and dumps the
// built-in prompt templates (prompts/). Everything is deterministic: grids
// come from fixed-seed generators and expected values are computed through
// the same write/parse/compute chain the fixture scripts perform at run time.

#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/llm.hpp"
#include "geoflow/validation.hpp"

using geoflow::AsciiGrid;
using geoflow::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNoData = -9999.0;
constexpr int kRows = 6;
constexpr int kCols = 6;

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// ---------------------------------------------------------------------------
// fixture python bodies (mirror the GF_* runtime contract)

std::string py_helpers() {
    return R"PY(import json, os

def read_grid(path):
    with open(path) as f:
        hdr = {}
        for _ in range(6):
            k, v = f.readline().split()
            hdr[k.lower()] = v
        rows, cols = int(hdr["nrows"]), int(hdr["ncols"])
        nodata = float(hdr["nodata_value"])
        grid = [[float(t) for t in f.readline().split()] for _ in range(rows)]
    return rows, cols, nodata, grid

def write_grid(path, rows, cols, nodata, grid):
    with open(path, "w") as f:
        f.write("ncols %d\nnrows %d\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value %.10g\n"
                % (cols, rows, nodata))
        for row in grid:
            f.write(" ".join("%.10g" % v for v in row) + "\n")

def valid_cells(grid, nodata):
    return [v for row in grid for v in row if v != nodata]

ins = [l.split("=", 1) for l in os.environ.get("GF_INPUTS", "").splitlines() if l]
outs = [l.split("=", 1) for l in os.environ.get("GF_OUTPUTS", "").splitlines() if l]
params = json.loads(os.environ.get("GF_PARAMS", "{}"))
artifacts = []

def finish(results=None):
    json.dump({"artifacts": artifacts, "results": results}, open("manifest.json", "w"))
)PY";
}

std::string probe_body(const std::string& modality) {
    return std::string(R"PY(import json, os

def read_grid(path):
    with open(path) as f:
        hdr = {}
        for _ in range(6):
            k, v = f.readline().split()
            hdr[k.lower()] = v
        rows, cols = int(hdr["nrows"]), int(hdr["ncols"])
        nodata = float(hdr["nodata_value"])
        vals = []
        for _ in range(rows):
            vals.extend(float(t) for t in f.readline().split())
    return rows, cols, nodata, vals

items = []
for p in os.environ["GF_DATA_POINTERS"].splitlines():
    rows, cols, nodata, vals = read_grid(p)
    valid = [v for v in vals if v != nodata]
    frac = 1.0 - (len(valid) / len(vals)) if vals else 0.0
    if valid:
        mn, mx, mean = min(valid), max(valid), sum(valid) / len(valid)
    else:
        mn = mx = mean = 0.0
    items.append({"path": p, "modality": ")PY") +
           modality + R"PY(", "rows": rows, "cols": cols, "bands": 1,
                  "crs": "local-grid", "min": [mn], "max": [mx], "mean": [mean],
                  "nodata_fraction": [frac]})
json.dump({"items": items}, open("profile.json", "w"))
)PY";
}

// clamp cells outside [min_valid, max_valid] to nodata; one output per input
std::string clean_body() {
    return py_helpers() + R"PY(
lo = float(params.get("min_valid", 0.0))
hi = float(params.get("max_valid", 1e30))
for (in_name, in_path), (out_name, out_rel) in zip(ins, outs):
    rows, cols, nodata, grid = read_grid(in_path)
    cleaned = [[v if v == nodata or (lo <= v <= hi) else nodata for v in row] for row in grid]
    write_grid(out_rel, rows, cols, nodata, cleaned)
    artifacts.append({"name": out_name, "path": out_rel, "kind": "raster", "stats": None})
finish()
)PY";
}

// (a - b) / (a + b) over the two inputs, in GF_INPUTS order
std::string normdiff_body(const std::string& out_kind) {
    return py_helpers() + R"PY(
rows, cols, nodata, a = read_grid(ins[0][1])
_, _, _, b = read_grid(ins[1][1])
nd = []
for r in range(rows):
    row = []
    for c in range(cols):
        x, y = a[r][c], b[r][c]
        if x == nodata or y == nodata or (x + y) == 0.0:
            row.append(nodata)
        else:
            row.append((x - y) / (x + y))
    nd.append(row)
out_name, out_rel = outs[0]
write_grid(out_rel, rows, cols, nodata, nd)
artifacts.append({"name": out_name, "path": out_rel, "kind": ")PY" +
           out_kind + R"PY(", "stats": None})
finish()
)PY";
}

// invoke the named external command tool on the single input
std::string extcall_body() {
    return py_helpers() + R"PY(
import subprocess
tools = dict(l.split("=", 1) for l in os.environ.get("GF_TOOLS", "").splitlines() if l)
template = tools[params["tool"]]
out_name, out_rel = outs[0]
cmd = template.replace("{input}", ins[0][1]).replace("{output}", out_rel)
subprocess.run(cmd.split(), check=True)
artifacts.append({"name": out_name, "path": out_rel, "kind": params.get("kind", "raster"),
                  "stats": None})
finish()
)PY";
}

// 1.0 where the cell equals params["match"], else 0.0
std::string mask_eq_body() {
    return py_helpers() + R"PY(
match = float(params["match"])
rows, cols, nodata, grid = read_grid(ins[0][1])
mask = [[v if v == nodata else (1.0 if v == match else 0.0) for v in row] for row in grid]
out_name, out_rel = outs[0]
write_grid(out_rel, rows, cols, nodata, mask)
artifacts.append({"name": out_name, "path": out_rel, "kind": params.get("kind", "classification:0-1"),
                  "stats": None})
finish()
)PY";
}

// divide valid cells by params["divisor"]
std::string norm_body() {
    return py_helpers() + R"PY(
d = float(params["divisor"])
rows, cols, nodata, grid = read_grid(ins[0][1])
normed = [[v if v == nodata else v / d for v in row] for row in grid]
out_name, out_rel = outs[0]
write_grid(out_rel, rows, cols, nodata, normed)
artifacts.append({"name": out_name, "path": out_rel, "kind": params.get("kind", "norm"),
                  "stats": None})
finish()
)PY";
}

// mean / max / threshold fraction of the single input, as key-value results
std::string stats_body() {
    return py_helpers() + R"PY(
prefix = params.get("prefix", "value")
t = float(params.get("threshold", 0.0))
below = params.get("direction", "above") == "below"
rows, cols, nodata, grid = read_grid(ins[0][1])
valid = valid_cells(grid, nodata)
mean = sum(valid) / len(valid) if valid else 0.0
peak = max(valid) if valid else 0.0
hits = sum(1 for v in valid if (v < t if below else v > t))
frac = hits / len(valid) if valid else 0.0
results = {prefix + "_mean": mean, prefix + "_max": peak, prefix + "_frac": frac}
with open("results.json", "w") as f:
    json.dump(results, f)
artifacts.append({"name": "report", "path": "results.json", "kind": "keyvalue", "stats": None})
finish(results)
)PY";
}

std::string threshold_tool_py() {
    return R"PY(# threshold mask stand-in for a pre-trained segmentation model
import sys

src, dst, t = sys.argv[1], sys.argv[2], float(sys.argv[3])
below = len(sys.argv) > 4 and sys.argv[4] == "below"
with open(src) as f:
    hdr_lines = [f.readline() for _ in range(6)]
    nodata = float(hdr_lines[5].split()[1])
    rows = int(hdr_lines[1].split()[1])
    grid = [[float(tok) for tok in f.readline().split()] for _ in range(rows)]
with open(dst, "w") as f:
    f.writelines(hdr_lines)
    for row in grid:
        out = []
        for v in row:
            if v == nodata:
                out.append(v)
            else:
                hit = v < t if below else v > t
                out.append(1.0 if hit else 0.0)
        f.write(" ".join("%.10g" % v for v in out) + "\n")
)PY";
}

// ---------------------------------------------------------------------------
// C++ mirrors of the fixture arithmetic (file-roundtripped doubles)

struct Grid {
    std::vector<double> cells;
    int rows = kRows, cols = kCols;
};

Grid load(const fs::path& p) {
    AsciiGrid g = geoflow::read_ascii_grid(p);
    return Grid{g.cells(), g.rows(), g.cols()};
}

void store(const fs::path& p, const Grid& g) {
    AsciiGrid::write(p, g.rows, g.cols, g.cells, kNoData);
}

Grid clean(const Grid& g, double lo, double hi) {
    Grid out = g;
    for (double& v : out.cells)
        if (v != kNoData && !(lo <= v && v <= hi)) v = kNoData;
    return out;
}

Grid normdiff(const Grid& a, const Grid& b) {
    Grid out = a;
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        double x = a.cells[i], y = b.cells[i];
        out.cells[i] =
            (x == kNoData || y == kNoData || x + y == 0.0) ? kNoData : (x - y) / (x + y);
    }
    return out;
}

Grid mask_eq(const Grid& g, double match) {
    Grid out = g;
    for (double& v : out.cells)
        if (v != kNoData) v = (v == match) ? 1.0 : 0.0;
    return out;
}

Grid norm(const Grid& g, double divisor) {
    Grid out = g;
    for (double& v : out.cells)
        if (v != kNoData) v /= divisor;
    return out;
}

Grid threshold(const Grid& g, double t, bool below) {
    Grid out = g;
    for (double& v : out.cells)
        if (v != kNoData) v = (below ? v < t : v > t) ? 1.0 : 0.0;
    return out;
}

struct GridStats {
    double mean = 0, peak = 0, frac = 0;
};

GridStats grid_stats(const Grid& g, double t, bool below) {
    GridStats s;
    double sum = 0;
    long n = 0, hits = 0;
    for (double v : g.cells) {
        if (v == kNoData) continue;
        ++n;
        sum += v;
        s.peak = std::max(s.peak, v);
        if (below ? v < t : v > t) ++hits;
    }
    if (n) {
        s.mean = sum / static_cast<double>(n);
        s.frac = static_cast<double>(hits) / static_cast<double>(n);
    }
    return s;
}

double grid_mean(const Grid& g) { return grid_stats(g, 0, false).mean; }

// deterministic per-case pseudo values rounded to 4 decimals
std::vector<double> synth_cells(unsigned seed, double lo, double hi, double nodata_rate,
                                bool integer_classes = false, int class_max = 5) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> value(lo, hi);
    std::uniform_real_distribution<double> hole(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, class_max);
    std::vector<double> cells;
    for (int i = 0; i < kRows * kCols; ++i) {
        if (hole(rng) < nodata_rate) {
            cells.push_back(kNoData);
        } else if (integer_classes) {
            cells.push_back(static_cast<double>(cls(rng)));
        } else {
            cells.push_back(std::round(value(rng) * 10000.0) / 10000.0);
        }
    }
    return cells;
}

unsigned seed_of(const std::string& name) {
    unsigned h = 2166136261u;
    for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 16777619u;
    return h;
}

// ---------------------------------------------------------------------------
// fixture document assembly

json fixture_doc(std::vector<std::string> data_summary, std::vector<std::string> planner,
                 std::vector<std::string> workflow, std::vector<std::string> coder) {
    return json{{"queues",
                 {{"data_summary", data_summary},
                  {"planner", planner},
                  {"workflow", workflow},
                  {"coder", coder}}},
                {"strict", true}};
}

json plan_step(const std::string& id, const std::string& desc, const std::string& stage,
               std::vector<std::string> in, std::vector<std::string> out) {
    return json{{"step_id", id}, {"description", desc}, {"stage", stage},
                {"required_inputs", in}, {"produced_outputs", out}};
}

json wf_node(const std::string& id, const std::string& stage, const std::string& purpose,
             std::vector<std::pair<std::string, std::string>> inputs,
             std::vector<std::pair<std::string, std::string>> outputs, json params) {
    json in = json::array(), out = json::array();
    for (auto& [name, kind] : inputs) in.push_back({{"name", name}, {"kind", kind}});
    for (auto& [name, kind] : outputs)
        out.push_back({{"name", name}, {"kind", kind}, {"path", name}});
    return json{{"node_id", id}, {"purpose", purpose}, {"stage", stage},
                {"inputs", in}, {"outputs", out}, {"params", params}};
}

// one planner response replicated n times (the default engine asks for 3)
std::vector<std::string> plan_copies(const json& plan, int n = 3) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(plan.dump());
    return out;
}

json numeric_expect(const std::string& key, double expected, double rel = 1e-6,
                    double abs = 1e-9) {
    return json{{"key", key}, {"expected", expected}, {"rel_tol", rel}, {"abs_tol", abs}};
}

// ---------------------------------------------------------------------------
// case assembly

struct CaseDef {
    std::string id;
    std::string domain;
    std::string modality;   // probe answer
    std::string task_text;
    // data preparation
    std::vector<std::string> bands;  // raw band file stems, e.g. {"red", "nir"}
    double min_valid = 0.0;
    double max_valid = 1e30;
    // feature extraction: exactly one of these modes
    enum class Fe { normdiff, extcall, mask_eq, normalize } fe = Fe::normdiff;
    std::string fe_output;           // e.g. "ndvi.asc"
    std::string fe_kind = "raster";  // semantic kind of the output
    double fe_param = 0.0;           // match value / divisor / tool threshold
    bool fe_below = false;           // extcall: threshold direction
    std::string tool_id;             // extcall: external command entry
    int fe_coder_failures = 0;       // crashing bodies before the good one
    // geospatial analysis
    std::string prefix;              // results key prefix
    double ga_threshold = 0.0;
    bool ga_below = false;
    // grid synthesis
    double lo = 0.0, hi = 1.0, nodata_rate = 0.08;
    bool integer_classes = false;
    int class_max = 5;
};

void build_case(const fs::path& case_dir, const CaseDef& def) {
    // ---- raw data
    std::vector<fs::path> band_paths;
    for (const auto& band : def.bands) {
        fs::path p = case_dir / "data" / (band + ".asc");
        AsciiGrid::write(p, kRows, kCols,
                         synth_cells(seed_of(def.id + ":" + band), def.lo, def.hi,
                                     def.nodata_rate, def.integer_classes, def.class_max),
                         kNoData);
        band_paths.push_back(p);
    }

    // ---- truth chain (roundtripped through files at every stage boundary)
    std::vector<Grid> cleaned;
    std::vector<std::string> clean_names;
    for (std::size_t i = 0; i < band_paths.size(); ++i) {
        Grid raw = load(band_paths[i]);
        Grid c = clean(raw, def.min_valid, def.max_valid);
        std::string name = def.bands[i] + "_clean.asc";
        store(case_dir / "truth" / "data_preparation" / name, c);
        cleaned.push_back(load(case_dir / "truth" / "data_preparation" / name));
        clean_names.push_back(name);
    }

    Grid feature{std::vector<double>(kRows * kCols, kNoData)};
    switch (def.fe) {
        case CaseDef::Fe::normdiff: feature = normdiff(cleaned[0], cleaned[1]); break;
        case CaseDef::Fe::extcall: feature = threshold(cleaned[0], def.fe_param, def.fe_below); break;
        case CaseDef::Fe::mask_eq: feature = mask_eq(cleaned[0], def.fe_param); break;
        case CaseDef::Fe::normalize: feature = norm(cleaned[0], def.fe_param); break;
    }
    store(case_dir / "truth" / "feature_extraction" / def.fe_output, feature);
    Grid feature_rt = load(case_dir / "truth" / "feature_extraction" / def.fe_output);
    GridStats ga = grid_stats(feature_rt, def.ga_threshold, def.ga_below);

    // ---- external tool stand-in
    json provided_tools = json::array();
    if (def.fe == CaseDef::Fe::extcall) {
        write_text(case_dir / "tools" / "threshold.py", threshold_tool_py());
        char cmd[256];
        std::snprintf(cmd, sizeof(cmd), "python3 {case_dir}/tools/threshold.py {input} {output} %.10g%s",
                      def.fe_param, def.fe_below ? " below" : "");
        provided_tools.push_back(json{{"entry_id", def.tool_id},
                                      {"tier", "external_command"},
                                      {"description",
                                       "pre-trained segmentation stand-in: thresholds a raster"},
                                      {"body", cmd},
                                      {"provenance", "bundled:" + def.id}});
    }

    // ---- workflow nodes
    std::vector<std::pair<std::string, std::string>> raw_inputs, clean_outputs, clean_inputs;
    for (std::size_t i = 0; i < def.bands.size(); ++i) {
        raw_inputs.push_back({def.bands[i] + ".asc", def.modality});
        clean_outputs.push_back({clean_names[i], "raster"});
        clean_inputs.push_back({clean_names[i], "raster"});
    }
    json prep_params{{"min_valid", def.min_valid}};
    if (def.max_valid < 1e29) prep_params["max_valid"] = def.max_valid;
    json prep_node = wf_node("prep", "data_preparation",
                             "clean and clip the raw " + def.modality + " bands", raw_inputs,
                             clean_outputs, prep_params);

    json fe_params = json::object();
    std::string fe_body;
    std::string fe_purpose;
    switch (def.fe) {
        case CaseDef::Fe::normdiff:
            fe_body = normdiff_body(def.fe_kind);
            fe_purpose = "compute the normalized difference " + def.prefix + " raster";
            break;
        case CaseDef::Fe::extcall:
            fe_params = json{{"tool", def.tool_id}, {"kind", def.fe_kind}};
            fe_body = extcall_body();
            fe_purpose = "run the provided segmentation model on the scene";
            break;
        case CaseDef::Fe::mask_eq:
            fe_params = json{{"match", def.fe_param}, {"kind", def.fe_kind}};
            fe_body = mask_eq_body();
            fe_purpose = "extract the class-of-interest mask from the product";
            break;
        case CaseDef::Fe::normalize:
            fe_params = json{{"divisor", def.fe_param}, {"kind", def.fe_kind}};
            fe_body = norm_body();
            fe_purpose = "normalize the radiance raster";
            break;
    }
    std::vector<std::pair<std::string, std::string>> fe_in =
        def.fe == CaseDef::Fe::normdiff
            ? std::vector<std::pair<std::string, std::string>>{clean_inputs[0], clean_inputs[1]}
            : std::vector<std::pair<std::string, std::string>>{clean_inputs[0]};
    json fe_node = wf_node("extract", "feature_extraction", fe_purpose, fe_in,
                           {{def.fe_output, def.fe_kind}}, fe_params);

    json ga_params{{"prefix", def.prefix}, {"threshold", def.ga_threshold}};
    if (def.ga_below) ga_params["direction"] = "below";
    json ga_node = wf_node("analyze", "geospatial_analysis",
                           "summarize the " + def.prefix + " raster as key figures",
                           {{def.fe_output, def.fe_kind}}, {{"report", "keyvalue"}}, ga_params);

    // ---- plans
    std::vector<std::string> raw_names, clean_list{clean_names.begin(), clean_names.end()};
    for (const auto& b : def.bands) raw_names.push_back(b + ".asc");
    json dp_plan{{"plan_id", "p1"},
                 {"steps", {plan_step("s1", "clean and clip the raw bands", "data_preparation",
                                      raw_names, clean_list)}}};
    json fe_plan{{"plan_id", "p1"},
                 {"steps", {plan_step("s1", fe_purpose, "feature_extraction", clean_list,
                                      {def.fe_output})}}};
    json ga_plan{{"plan_id", "p1"},
                 {"steps", {plan_step("s1", "report key figures", "geospatial_analysis",
                                      {def.fe_output}, {"report"})}}};
    json e2e_plan{{"plan_id", "p1"},
                  {"steps",
                   {plan_step("s1", "clean and clip the raw bands", "data_preparation",
                              raw_names, clean_list),
                    plan_step("s2", fe_purpose, "feature_extraction", clean_list,
                              {def.fe_output}),
                    plan_step("s3", "report key figures", "geospatial_analysis",
                              {def.fe_output}, {"report"})}}};

    // ---- fixtures
    std::string narrative = "desk-scale " + def.modality + " scene for " + def.domain;
    std::vector<std::string> fe_coders;
    for (int i = 0; i < def.fe_coder_failures; ++i)
        fe_coders.push_back("raise RuntimeError('transient tool defect')\n");
    fe_coders.push_back(fe_body);

    json fx_dp = fixture_doc({probe_body(def.modality), narrative}, plan_copies(dp_plan),
                             {json{{"nodes", {prep_node}}}.dump()}, {clean_body()});
    json fx_fe = fixture_doc({probe_body(def.modality), narrative}, plan_copies(fe_plan),
                             {json{{"nodes", {fe_node}}}.dump()}, fe_coders);
    json fx_ga = fixture_doc({probe_body(def.modality), narrative}, plan_copies(ga_plan),
                             {json{{"nodes", {ga_node}}}.dump()}, {stats_body()});
    std::vector<std::string> e2e_coders{clean_body()};
    for (const auto& c : fe_coders) e2e_coders.push_back(c);
    e2e_coders.push_back(stats_body());
    json fx_e2e = fixture_doc({probe_body(def.modality), narrative}, plan_copies(e2e_plan),
                              {json{{"nodes", {prep_node, fe_node, ga_node}}}.dump()},
                              e2e_coders);
    write_text(case_dir / "fixtures" / "data_preparation.json", fx_dp.dump(2));
    write_text(case_dir / "fixtures" / "feature_extraction.json", fx_fe.dump(2));
    write_text(case_dir / "fixtures" / "geospatial_analysis.json", fx_ga.dump(2));
    write_text(case_dir / "fixtures" / "end_to_end.json", fx_e2e.dump(2));

    // ---- expectations
    json dp_spec;
    {
        json locations = json::array(), numerics = json::array();
        json metadata = json::object();
        for (std::size_t i = 0; i < clean_names.size(); ++i) {
            locations.push_back("prep/" + clean_names[i]);
            numerics.push_back(numeric_expect(clean_names[i] + ".mean", grid_mean(cleaned[i])));
            metadata[clean_names[i] + ".rows"] = kRows;
            metadata[clean_names[i] + ".cols"] = kCols;
        }
        dp_spec = json{{"location_expect", locations},
                       {"numeric_expect", numerics},
                       {"metadata_expect", metadata}};
    }
    json fe_spec{{"location_expect", {"extract/" + def.fe_output}},
                 {"numeric_expect",
                  {numeric_expect(def.fe_output + ".mean", grid_mean(feature_rt))}},
                 {"metadata_expect",
                  {{def.fe_output + ".rows", kRows}, {def.fe_output + ".cols", kCols}}}};
    json ga_spec{{"numeric_expect",
                  {numeric_expect("results." + def.prefix + "_mean", ga.mean),
                   numeric_expect("results." + def.prefix + "_max", ga.peak),
                   numeric_expect("results." + def.prefix + "_frac", ga.frac)}}};

    // ---- case manifest
    json case_doc{{"case_id", def.id},
                  {"domain", def.domain},
                  {"instruction",
                   {{"id", def.id},
                    {"text", def.task_text},
                    {"domain_hint", def.domain},
                    {"stage_scope", "full_pipeline"}}},
                  {"inputs", [&] {
                       json arr = json::array();
                       for (const auto& b : def.bands) arr.push_back("data/" + b + ".asc");
                       return arr;
                   }()},
                  {"provided_tools", provided_tools},
                  {"stage_specs",
                   {{"data_preparation", dp_spec},
                    {"feature_extraction", fe_spec},
                    {"geospatial_analysis", ga_spec}}},
                  {"fixtures",
                   {{"data_preparation", "fixtures/data_preparation.json"},
                    {"feature_extraction", "fixtures/feature_extraction.json"},
                    {"geospatial_analysis", "fixtures/geospatial_analysis.json"},
                    {"end_to_end", "fixtures/end_to_end.json"}}}};
    write_text(case_dir / "case.json", case_doc.dump(2));
}

std::vector<CaseDef> corpus() {
    std::vector<CaseDef> defs;

    CaseDef veg;
    veg.id = "vegetation_ndvi";
    veg.domain = "vegetation";
    veg.modality = "multispectral";
    veg.task_text = "Map vegetation vigor over the scene: prepare the red and near-infrared "
                    "bands, derive NDVI and report its key statistics.";
    veg.bands = {"red", "nir"};
    veg.max_valid = 1.0;
    veg.fe = CaseDef::Fe::normdiff;
    veg.fe_output = "ndvi.asc";
    veg.fe_kind = "ndvi";
    veg.prefix = "ndvi";
    veg.ga_threshold = 0.3;
    defs.push_back(veg);

    CaseDef canopy;
    canopy.id = "vegetation_canopy_product";
    canopy.domain = "vegetation";
    canopy.modality = "product";
    canopy.task_text = "Quantify forest canopy share from the land-cover product: isolate the "
                       "forest class and report its area fraction.";
    canopy.bands = {"landcover"};
    canopy.integer_classes = true;
    canopy.max_valid = 5.0;
    canopy.fe = CaseDef::Fe::mask_eq;
    canopy.fe_param = 2.0;  // forest class id
    canopy.fe_output = "forest_mask.asc";
    canopy.fe_kind = "classification:0-1";
    canopy.prefix = "forest";
    canopy.ga_threshold = 0.5;
    defs.push_back(canopy);

    CaseDef ndbi;
    ndbi.id = "urban_ndbi";
    ndbi.domain = "urban";
    ndbi.modality = "multispectral";
    ndbi.task_text = "Characterize built-up intensity: prepare shortwave-infrared and "
                     "near-infrared bands, derive the built-up index and summarize it.";
    ndbi.bands = {"swir", "nir"};
    ndbi.max_valid = 1.0;
    ndbi.fe = CaseDef::Fe::normdiff;
    ndbi.fe_output = "ndbi.asc";
    ndbi.fe_kind = "ndbi";
    ndbi.prefix = "ndbi";
    ndbi.ga_threshold = 0.1;
    defs.push_back(ndbi);

    CaseDef builtup;
    builtup.id = "urban_builtup_rgb";
    builtup.domain = "urban";
    builtup.modality = "rgb";
    builtup.task_text = "Delineate bright built-up surfaces on the aerial mosaic using the "
                        "provided segmentation model and report the built-up share.";
    builtup.bands = {"brightness"};
    builtup.lo = 0.0;
    builtup.hi = 255.0;
    builtup.max_valid = 255.0;
    builtup.fe = CaseDef::Fe::extcall;
    builtup.fe_param = 128.0;
    builtup.tool_id = "segment_threshold";
    builtup.fe_output = "builtup_mask.asc";
    builtup.fe_kind = "classification:0-1";
    builtup.prefix = "builtup";
    builtup.ga_threshold = 0.5;
    defs.push_back(builtup);

    CaseDef ndwi;
    ndwi.id = "water_ndwi";
    ndwi.domain = "water";
    ndwi.modality = "multispectral";
    ndwi.task_text = "Map open water: prepare the green and near-infrared bands, derive NDWI "
                     "and report its statistics.";
    ndwi.bands = {"green", "nir"};
    ndwi.max_valid = 1.0;
    ndwi.fe = CaseDef::Fe::normdiff;
    ndwi.fe_output = "ndwi.asc";
    ndwi.fe_kind = "ndwi";
    ndwi.prefix = "ndwi";
    ndwi.ga_threshold = 0.0;
    defs.push_back(ndwi);

    CaseDef sar_water;
    sar_water.id = "water_extent_sar";
    sar_water.domain = "water";
    sar_water.modality = "sar";
    sar_water.task_text = "Delineate water extent from the radar backscatter scene with the "
                          "provided low-backscatter segmentation model.";
    sar_water.bands = {"vv"};
    sar_water.lo = 0.001;
    sar_water.hi = 1.2;
    sar_water.max_valid = 1.2;
    sar_water.fe = CaseDef::Fe::extcall;
    sar_water.fe_param = 0.08;
    sar_water.fe_below = true;
    sar_water.tool_id = "water_threshold";
    sar_water.fe_output = "water_mask.asc";
    sar_water.fe_kind = "classification:0-1";
    sar_water.prefix = "water";
    sar_water.ga_threshold = 0.5;
    defs.push_back(sar_water);

    CaseDef agri;
    agri.id = "agriculture_field_ndvi";
    agri.domain = "agriculture";
    agri.modality = "multispectral";
    agri.task_text = "Assess crop condition over the field block: derive NDVI from red and "
                     "near-infrared reflectance and report vigorous-area share.";
    agri.bands = {"red", "nir"};
    agri.max_valid = 1.0;
    agri.fe = CaseDef::Fe::normdiff;
    agri.fe_output = "ndvi.asc";
    agri.fe_kind = "ndvi";
    agri.prefix = "crop";
    agri.ga_threshold = 0.5;
    defs.push_back(agri);

    CaseDef moisture;
    moisture.id = "agriculture_moisture_sar";
    moisture.domain = "agriculture";
    moisture.modality = "sar";
    moisture.task_text = "Estimate surface moisture contrast from dual-polarization radar: "
                         "derive the polarization ratio index and summarize it.";
    moisture.bands = {"vv", "vh"};
    moisture.lo = 0.001;
    moisture.hi = 1.2;
    moisture.max_valid = 1.2;
    moisture.fe = CaseDef::Fe::normdiff;
    moisture.fe_output = "pol_ratio.asc";
    moisture.fe_kind = "ratio";
    moisture.fe_coder_failures = 1;  // exercises one debug round
    moisture.prefix = "moisture";
    moisture.ga_threshold = 0.2;
    defs.push_back(moisture);

    CaseDef soil;
    soil.id = "soil_bare_fraction";
    soil.domain = "soil";
    soil.modality = "multispectral";
    soil.task_text = "Estimate bare-soil exposure: derive NDVI and report the share of cells "
                     "below the sparse-vegetation level.";
    soil.bands = {"red", "nir"};
    soil.max_valid = 1.0;
    soil.fe = CaseDef::Fe::normdiff;
    soil.fe_output = "ndvi.asc";
    soil.fe_kind = "ndvi";
    soil.prefix = "bare";
    soil.ga_threshold = 0.2;
    soil.ga_below = true;
    defs.push_back(soil);

    CaseDef ntl;
    ntl.id = "economy_ntl_activity";
    ntl.domain = "economy";
    ntl.modality = "ntl";
    ntl.task_text = "Gauge economic activity from nighttime lights: normalize the radiance "
                    "scene and report activity statistics.";
    ntl.bands = {"radiance"};
    ntl.lo = 0.0;
    ntl.hi = 60.0;
    ntl.max_valid = 60.0;
    ntl.fe = CaseDef::Fe::normalize;
    ntl.fe_param = 60.0;
    ntl.fe_output = "activity.asc";
    ntl.fe_kind = "norm";
    ntl.prefix = "activity";
    ntl.ga_threshold = 0.5;
    defs.push_back(ntl);

    CaseDef ndsi;
    ndsi.id = "snow_ndsi";
    ndsi.domain = "snow";
    ndsi.modality = "multispectral";
    ndsi.task_text = "Map snow cover: prepare green and shortwave-infrared bands, derive NDSI "
                     "and report the snow statistics.";
    ndsi.bands = {"green", "swir"};
    ndsi.max_valid = 1.0;
    ndsi.fe = CaseDef::Fe::normdiff;
    ndsi.fe_output = "ndsi.asc";
    ndsi.fe_kind = "ndsi";
    ndsi.prefix = "snow";
    ndsi.ga_threshold = 0.4;
    defs.push_back(ndsi);

    CaseDef snowp;
    snowp.id = "snow_cover_product";
    snowp.domain = "snow";
    snowp.modality = "product";
    snowp.task_text = "Quantify snow persistence from the snow-cover product: isolate the snow "
                      "class and report its area fraction.";
    snowp.bands = {"snowcover"};
    snowp.integer_classes = true;
    snowp.class_max = 3;
    snowp.max_valid = 3.0;
    snowp.fe = CaseDef::Fe::mask_eq;
    snowp.fe_param = 1.0;  // snow class id
    snowp.fe_output = "snow_mask.asc";
    snowp.fe_kind = "classification:0-1";
    snowp.prefix = "snow";
    snowp.ga_threshold = 0.5;
    defs.push_back(snowp);

    return defs;
}

}  // namespace

int main(int argc, char** argv) {
    fs::path cases_out = "cases";
    fs::path prompts_out = "prompts";
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--cases-out" && i + 1 < argc) cases_out = argv[++i];
        else if (arg == "--prompts-out" && i + 1 < argc) prompts_out = argv[++i];
        else {
            std::cerr << "usage: gen_cases [--cases-out DIR] [--prompts-out DIR]\n";
            return 2;
        }
    }

    for (const auto& [id, text] : geoflow::prompt_defaults::table())
        write_text(prompts_out / (id + ".txt"), text);
    std::cout << "prompt templates -> " << prompts_out.string() << "\n";

    int n = 0;
    for (const auto& def : corpus()) {
        build_case(cases_out / def.id, def);
        ++n;
    }
    std::cout << n << " cases -> " << cases_out.string() << "\n";
    return 0;
}
