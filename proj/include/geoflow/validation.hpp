#pragma once

// Deterministic core of the checking agent: a reader for the self-contained
// ASCII grid raster format, the artifact manifest schema generated tools must
// write, and the rule engine deciding convergence.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"

namespace geoflow {

// ---------------------------------------------------------------------------
// Raster stats

struct RasterStats {
    int rows = 0;
    int cols = 0;
    int bands = 1;
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
    double nodata_fraction = 0.0;
    double nodata_value = -9999.0;
    std::string crs = "unknown";

    bool has_valid_cells() const { return nodata_fraction < 1.0; }
};

inline json to_json(const RasterStats& s) {
    auto num_or_null = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    return json{{"rows", s.rows},
                {"cols", s.cols},
                {"bands", s.bands},
                {"min", num_or_null(s.min)},
                {"max", num_or_null(s.max)},
                {"mean", num_or_null(s.mean)},
                {"nodata_fraction", s.nodata_fraction},
                {"crs", s.crs}};
}

inline RasterStats raster_stats_from_json(const json& j) {
    RasterStats s;
    s.rows = j.value("rows", 0);
    s.cols = j.value("cols", 0);
    s.bands = j.value("bands", 1);
    auto num = [&](const char* key) {
        if (!j.contains(key) || j.at(key).is_null())
            return std::numeric_limits<double>::quiet_NaN();
        return j.at(key).get<double>();
    };
    s.min = num("min");
    s.max = num("max");
    s.mean = num("mean");
    s.nodata_fraction = j.value("nodata_fraction", 0.0);
    s.crs = j.value("crs", "unknown");
    return s;
}

// ---------------------------------------------------------------------------
// ASCII grid

// ESRI-style ASCII grid: six header lines (ncols, nrows, xllcorner, yllcorner,
// cellsize, NODATA_value; keys case-insensitive, any whitespace run), then
// nrows lines of ncols numerals, row-major, north row first.
class AsciiGrid {
public:
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double nodata_value() const { return nodata_; }
    double xllcorner() const { return xll_; }
    double yllcorner() const { return yll_; }
    double cellsize() const { return cellsize_; }

    double at(int row, int col) const {
        if (row < 0 || row >= rows_ || col < 0 || col >= cols_)
            throw ParameterError("cell index out of range");
        return cells_[static_cast<std::size_t>(row) * cols_ + col];
    }

    bool is_nodata(int row, int col) const { return at(row, col) == nodata_; }

    const std::vector<double>& cells() const { return cells_; }

    // Single pass over the valid cells.
    RasterStats stats() const {
        RasterStats s;
        s.rows = rows_;
        s.cols = cols_;
        s.bands = 1;
        s.nodata_value = nodata_;
        long valid = 0;
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (double v : cells_) {
            if (v == nodata_) continue;
            ++valid;
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const long total = static_cast<long>(rows_) * cols_;
        s.nodata_fraction = total == 0 ? 0.0 : 1.0 - static_cast<double>(valid) / total;
        if (valid > 0) {
            s.min = lo;
            s.max = hi;
            s.mean = sum / static_cast<double>(valid);
        }
        return s;
    }

    static AsciiGrid parse(std::istream& in, const std::string& origin = "<stream>");

    friend AsciiGrid read_ascii_grid(const fs::path&);

    // Grid writer used by fixtures and the corpus generator.
    static void write(const fs::path& path, int rows, int cols,
                      const std::vector<double>& cells, double nodata = -9999.0,
                      double xll = 0.0, double yll = 0.0, double cellsize = 30.0) {
        if (static_cast<long>(rows) * cols != static_cast<long>(cells.size()))
            throw ParameterError("cell count does not match rows*cols");
        fs::create_directories(path.parent_path());
        std::ofstream out(path);
        out << "ncols " << cols << "\n";
        out << "nrows " << rows << "\n";
        char buf[64];
        auto fmt = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            return std::string(buf);
        };
        out << "xllcorner " << fmt(xll) << "\n";
        out << "yllcorner " << fmt(yll) << "\n";
        out << "cellsize " << fmt(cellsize) << "\n";
        out << "NODATA_value " << fmt(nodata) << "\n";
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                if (c) out << ' ';
                out << fmt(cells[static_cast<std::size_t>(r) * cols + c]);
            }
            out << "\n";
        }
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    double xll_ = 0.0;
    double yll_ = 0.0;
    double cellsize_ = 1.0;
    double nodata_ = -9999.0;
    std::vector<double> cells_;
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool parse_double(const std::string& tok, double& out) {
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end != nullptr && *end == '\0' && end != tok.c_str();
}

}  // namespace detail

inline AsciiGrid AsciiGrid::parse(std::istream& in, const std::string& origin) {
    AsciiGrid g;
    static const std::vector<std::string> keys = {"ncols",     "nrows",    "xllcorner",
                                                  "yllcorner", "cellsize", "nodata_value"};
    std::map<std::string, double> header;
    std::string line;
    int line_no = 0;
    for (const auto& want : keys) {
        if (!std::getline(in, line))
            throw ParseError("truncated header in " + origin + ": missing " + want, line_no + 1);
        ++line_no;
        std::istringstream ls(line);
        std::string key, value, extra;
        ls >> key >> value;
        if (detail::lower(key) != want)
            throw ParseError("expected header key '" + want + "' in " + origin + ", got '" +
                                 key + "'",
                             line_no);
        double v;
        if (!detail::parse_double(value, v))
            throw ParseError("bad numeric header value for " + want + " in " + origin, line_no);
        if (ls >> extra)
            throw ParseError("trailing token after " + want + " in " + origin, line_no);
        header[want] = v;
    }
    double ncols_d = header["ncols"], nrows_d = header["nrows"];
    if (ncols_d <= 0 || nrows_d <= 0 || ncols_d != std::floor(ncols_d) ||
        nrows_d != std::floor(nrows_d))
        throw ParseError("ncols/nrows must be positive integers in " + origin, 1);
    g.cols_ = static_cast<int>(ncols_d);
    g.rows_ = static_cast<int>(nrows_d);
    g.xll_ = header["xllcorner"];
    g.yll_ = header["yllcorner"];
    g.cellsize_ = header["cellsize"];
    g.nodata_ = header["nodata_value"];
    g.cells_.reserve(static_cast<std::size_t>(g.rows_) * g.cols_);

    for (int r = 0; r < g.rows_; ++r) {
        if (!std::getline(in, line))
            throw ParseError("missing data row " + std::to_string(r + 1) + " in " + origin,
                             line_no + 1);
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        int c = 0;
        while (ls >> tok) {
            double v;
            if (!detail::parse_double(tok, v))
                throw ParseError("non-numeric cell '" + tok + "' in " + origin, line_no);
            if (c >= g.cols_)
                throw ParseError("row " + std::to_string(r + 1) + " has more than " +
                                     std::to_string(g.cols_) + " columns in " + origin,
                                 line_no);
            g.cells_.push_back(v);
            ++c;
        }
        if (c != g.cols_)
            throw ParseError("row " + std::to_string(r + 1) + " has " + std::to_string(c) +
                                 " of " + std::to_string(g.cols_) + " columns in " + origin,
                             line_no);
    }
    return g;
}

inline AsciiGrid read_ascii_grid(const fs::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw ParseError("cannot open raster: " + path.string());
    return AsciiGrid::parse(in, path.filename().string());
}

// ---------------------------------------------------------------------------
// Artifact manifest

struct Artifact {
    std::string name;
    std::string path;  // relative to the node workdir
    std::string kind;  // raster | table | keyvalue
    std::optional<RasterStats> stats;
};

struct ArtifactManifest {
    std::vector<Artifact> artifacts;
    json results = nullptr;  // key-value results or null

    const Artifact* find(const std::string& name) const {
        for (const auto& a : artifacts)
            if (a.name == name) return &a;
        return nullptr;
    }
};

inline ArtifactManifest manifest_from_json(const json& j) {
    ArtifactManifest m;
    if (!j.is_object()) throw ParseError("manifest must be a JSON object");
    if (j.contains("artifacts")) {
        if (!j.at("artifacts").is_array()) throw ParseError("manifest artifacts must be a list");
        for (const auto& aj : j.at("artifacts")) {
            Artifact a;
            a.name = aj.at("name").get<std::string>();
            a.path = aj.at("path").get<std::string>();
            a.kind = aj.value("kind", "raster");
            if (aj.contains("stats") && !aj.at("stats").is_null())
                a.stats = raster_stats_from_json(aj.at("stats"));
            m.artifacts.push_back(std::move(a));
        }
    }
    if (j.contains("results")) m.results = j.at("results");
    return m;
}

inline json to_json(const ArtifactManifest& m) {
    json arts = json::array();
    for (const auto& a : m.artifacts) {
        json aj{{"name", a.name}, {"path", a.path}, {"kind", a.kind}};
        aj["stats"] = a.stats ? to_json(*a.stats) : json(nullptr);
        arts.push_back(std::move(aj));
    }
    return json{{"artifacts", arts}, {"results", m.results}};
}

inline std::optional<ArtifactManifest> load_manifest(const fs::path& workdir) {
    fs::path p = workdir / "manifest.json";
    std::ifstream in(p);
    if (!in.is_open()) return std::nullopt;
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt;  // treated as absent; rules will fail on it
    }
    return manifest_from_json(j);
}

// ---------------------------------------------------------------------------
// Rules

enum class RuleKind {
    value_range,
    invalid_fraction_max,
    artifact_exists,
    metadata_match,
    keyvalue_tolerance,
};

inline std::string to_string(RuleKind k) {
    switch (k) {
        case RuleKind::value_range: return "value_range";
        case RuleKind::invalid_fraction_max: return "invalid_fraction_max";
        case RuleKind::artifact_exists: return "artifact_exists";
        case RuleKind::metadata_match: return "metadata_match";
        case RuleKind::keyvalue_tolerance: return "keyvalue_tolerance";
    }
    return "artifact_exists";
}

inline RuleKind rule_kind_from_string(const std::string& s) {
    if (s == "value_range") return RuleKind::value_range;
    if (s == "invalid_fraction_max") return RuleKind::invalid_fraction_max;
    if (s == "artifact_exists") return RuleKind::artifact_exists;
    if (s == "metadata_match") return RuleKind::metadata_match;
    if (s == "keyvalue_tolerance") return RuleKind::keyvalue_tolerance;
    throw ParseError("unknown rule kind: " + s);
}

// params by kind:
//   value_range          {artifact, lo, hi}
//   invalid_fraction_max {artifact, threshold}
//   artifact_exists      {artifact}            ("results" checks the kv block)
//   metadata_match       {artifact, expect: {crs?, rows?, cols?, bands?}}
//   keyvalue_tolerance   {key, expected, rel_tol?, abs_tol?}
struct ValidationRule {
    std::string rule_id;
    RuleKind kind = RuleKind::artifact_exists;
    json params = json::object();
};

inline void validate(const ValidationRule& r) {
    switch (r.kind) {
        case RuleKind::value_range: {
            double lo = r.params.at("lo").get<double>();
            double hi = r.params.at("hi").get<double>();
            if (lo > hi) throw ParameterError("value_range lo > hi in rule " + r.rule_id);
            break;
        }
        case RuleKind::invalid_fraction_max: {
            double t = r.params.at("threshold").get<double>();
            if (t < 0.0 || t > 1.0)
                throw ParameterError("invalid_fraction_max threshold outside [0,1] in rule " +
                                     r.rule_id);
            break;
        }
        case RuleKind::metadata_match:
            if (!r.params.contains("expect"))
                throw ParameterError("metadata_match needs expect params in rule " + r.rule_id);
            break;
        case RuleKind::keyvalue_tolerance:
            if (!r.params.contains("key") || !r.params.contains("expected"))
                throw ParameterError("keyvalue_tolerance needs key/expected in rule " +
                                     r.rule_id);
            break;
        case RuleKind::artifact_exists: break;
    }
}

inline json to_json(const ValidationRule& r) {
    return json{{"rule_id", r.rule_id}, {"kind", to_string(r.kind)}, {"params", r.params}};
}

inline ValidationRule rule_from_json(const json& j) {
    ValidationRule r;
    r.rule_id = j.at("rule_id").get<std::string>();
    r.kind = rule_kind_from_string(j.at("kind").get<std::string>());
    r.params = j.value("params", json::object());
    validate(r);
    return r;
}

inline std::vector<ValidationRule> rules_from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw ParameterError("cannot open rule file: " + path.string());
    json j;
    in >> j;
    if (!j.is_array()) throw ParseError("rule file must hold a JSON list");
    std::vector<ValidationRule> rules;
    for (const auto& rj : j) rules.push_back(rule_from_json(rj));
    return rules;
}

struct ValidationReport {
    bool pass = true;
    std::vector<std::pair<std::string, std::string>> failures;  // (rule_id, message)
    int checked = 0;

    void fail(const std::string& rule_id, const std::string& message) {
        pass = false;
        failures.emplace_back(rule_id, message);
    }

    std::string failure_text() const {
        std::ostringstream out;
        for (const auto& [id, msg] : failures) out << id << ": " << msg << "\n";
        return out.str();
    }
};

inline json to_json(const ValidationReport& r) {
    json fails = json::array();
    for (const auto& [id, msg] : r.failures)
        fails.push_back({{"rule_id", id}, {"message", msg}});
    return json{{"pass", r.pass}, {"failures", fails}, {"checked", r.checked}};
}

namespace detail {

// Stats for a named artifact: recomputed from disk when the file is a
// readable ASCII grid, else taken from the manifest.
inline std::optional<RasterStats> artifact_stats(const Artifact& a, const fs::path& workdir) {
    fs::path p = fs::path(a.path).is_absolute() ? fs::path(a.path) : workdir / a.path;
    if (fs::exists(p)) {
        try {
            RasterStats s = read_ascii_grid(p).stats();
            if (a.stats) s.crs = a.stats->crs;  // grid format carries no projection
            return s;
        } catch (const ParseError&) {
            // not an ascii grid; fall through to manifest stats
        }
    }
    return a.stats;
}

}  // namespace detail

// Evaluates every rule (no short-circuit); pass <=> zero failures. A rule that
// names a missing artifact fails rather than throwing.
inline ValidationReport evaluate_rules(const ArtifactManifest& manifest,
                                       const std::vector<ValidationRule>& rules,
                                       const fs::path& workdir) {
    ValidationReport report;
    report.checked = static_cast<int>(rules.size());
    for (const auto& rule : rules) {
        const std::string artifact_name = rule.params.value("artifact", "");

        if (rule.kind == RuleKind::keyvalue_tolerance) {
            const std::string key = rule.params.at("key").get<std::string>();
            if (!manifest.results.is_object() || !manifest.results.contains(key)) {
                report.fail(rule.rule_id, "result key missing: " + key);
                continue;
            }
            const json& actual_j = manifest.results.at(key);
            if (!actual_j.is_number()) {
                report.fail(rule.rule_id, "result key " + key + " is not numeric");
                continue;
            }
            double actual = actual_j.get<double>();
            double expected = rule.params.at("expected").get<double>();
            double rel = rule.params.value("rel_tol", 0.01);
            double abs = rule.params.value("abs_tol", 1e-6);
            double margin = std::max(abs, rel * std::abs(expected));
            if (std::abs(actual - expected) > margin) {
                std::ostringstream msg;
                msg << key << " = " << actual << " deviates from " << expected
                    << " beyond tolerance " << margin;
                report.fail(rule.rule_id, msg.str());
            }
            continue;
        }

        if (artifact_name == "results") {
            // existence of the key-value block itself
            if (rule.kind == RuleKind::artifact_exists) {
                if (!manifest.results.is_object() || manifest.results.empty())
                    report.fail(rule.rule_id, "results key-value block missing");
                continue;
            }
        }

        const Artifact* artifact = manifest.find(artifact_name);
        if (artifact == nullptr) {
            report.fail(rule.rule_id, "artifact missing: " + artifact_name);
            continue;
        }

        switch (rule.kind) {
            case RuleKind::artifact_exists: {
                fs::path p = fs::path(artifact->path).is_absolute() ? fs::path(artifact->path)
                                                                    : workdir / artifact->path;
                if (!fs::exists(p))
                    report.fail(rule.rule_id, "artifact file missing: " + artifact->path);
                break;
            }
            case RuleKind::value_range: {
                auto stats = detail::artifact_stats(*artifact, workdir);
                if (!stats) {
                    report.fail(rule.rule_id, "no stats for artifact: " + artifact_name);
                    break;
                }
                if (!stats->has_valid_cells()) break;  // invalid_fraction rules cover this
                double lo = rule.params.at("lo").get<double>();
                double hi = rule.params.at("hi").get<double>();
                if (stats->min < lo || stats->max > hi) {
                    std::ostringstream msg;
                    msg << artifact_name << " out of logical range [" << lo << ", " << hi
                        << "]: observed [" << stats->min << ", " << stats->max << "]";
                    report.fail(rule.rule_id, msg.str());
                }
                break;
            }
            case RuleKind::invalid_fraction_max: {
                auto stats = detail::artifact_stats(*artifact, workdir);
                if (!stats) {
                    report.fail(rule.rule_id, "no stats for artifact: " + artifact_name);
                    break;
                }
                double threshold = rule.params.at("threshold").get<double>();
                if (stats->nodata_fraction > threshold) {
                    std::ostringstream msg;
                    msg << artifact_name << " invalid fraction " << stats->nodata_fraction
                        << " exceeds " << threshold;
                    report.fail(rule.rule_id, msg.str());
                }
                break;
            }
            case RuleKind::metadata_match: {
                auto stats = detail::artifact_stats(*artifact, workdir);
                if (!stats) {
                    report.fail(rule.rule_id, "no stats for artifact: " + artifact_name);
                    break;
                }
                const json& expect = rule.params.at("expect");
                if (expect.contains("crs") && stats->crs != expect.at("crs").get<std::string>())
                    report.fail(rule.rule_id, "crs mismatch: " + stats->crs);
                if (expect.contains("rows") && stats->rows != expect.at("rows").get<int>())
                    report.fail(rule.rule_id,
                                "rows mismatch: " + std::to_string(stats->rows));
                if (expect.contains("cols") && stats->cols != expect.at("cols").get<int>())
                    report.fail(rule.rule_id,
                                "cols mismatch: " + std::to_string(stats->cols));
                if (expect.contains("bands") && stats->bands != expect.at("bands").get<int>())
                    report.fail(rule.rule_id,
                                "bands mismatch: " + std::to_string(stats->bands));
                break;
            }
            default: break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Default rules

// Normalized-difference indices are analytically confined to [-1, 1].
inline bool is_normalized_index(const std::string& kind) {
    std::string k = detail::lower(kind);
    return k == "ndvi" || k == "ndwi" || k == "ndsi" || k == "nbr";
}

// Pinned defaults per semantic kind. "classification" accepts an optional
// ":lo-hi" class-id range suffix; unknown kinds get an existence check only.
inline std::vector<ValidationRule> default_rules_for(const std::string& semantic_kind,
                                                     const std::string& artifact_name = "") {
    std::vector<ValidationRule> rules;
    auto with_artifact = [&](ValidationRule r) {
        if (!artifact_name.empty()) r.params["artifact"] = artifact_name;
        rules.push_back(std::move(r));
        return;
    };
    const std::string kind = detail::lower(semantic_kind);
    const std::string prefix = (artifact_name.empty() ? kind : artifact_name) + ":";

    if (is_normalized_index(kind)) {
        with_artifact({prefix + "value_range", RuleKind::value_range,
                       json{{"artifact", kind}, {"lo", -1.0}, {"hi", 1.0}}});
        with_artifact({prefix + "invalid_fraction_max", RuleKind::invalid_fraction_max,
                       json{{"artifact", kind}, {"threshold", 0.99}}});
        with_artifact(
            {prefix + "exists", RuleKind::artifact_exists, json{{"artifact", kind}}});
        return rules;
    }
    if (kind.rfind("classification", 0) == 0) {
        double lo = 0.0, hi = 255.0;
        auto colon = kind.find(':');
        if (colon != std::string::npos) {
            auto dash = kind.find('-', colon);
            if (dash != std::string::npos) {
                lo = std::stod(kind.substr(colon + 1, dash - colon - 1));
                hi = std::stod(kind.substr(dash + 1));
            }
        }
        with_artifact({prefix + "class_range", RuleKind::value_range,
                       json{{"artifact", kind}, {"lo", lo}, {"hi", hi}}});
        with_artifact({prefix + "invalid_fraction_max", RuleKind::invalid_fraction_max,
                       json{{"artifact", kind}, {"threshold", 0.99}}});
        with_artifact(
            {prefix + "exists", RuleKind::artifact_exists, json{{"artifact", kind}}});
        return rules;
    }
    if (kind == "keyvalue") {
        with_artifact({prefix + "results_exist", RuleKind::artifact_exists,
                       json{{"artifact", "results"}}});
        // keep the artifact binding on results, not the artifact name
        rules.back().params["artifact"] = "results";
        return rules;
    }
    with_artifact({prefix + "exists", RuleKind::artifact_exists, json{{"artifact", kind}}});
    return rules;
}

}  // namespace geoflow
