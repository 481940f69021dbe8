#pragma once

// The structured data context D: per-item spatio-temporal-modal facts distilled
// from probing, plus the narrative used in planning prompts.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"

namespace geoflow {

inline const std::vector<std::string>& known_modalities() {
    static const std::vector<std::string> m = {"rgb", "multispectral", "sar", "ntl",
                                               "product", "tabular", "unknown"};
    return m;
}

struct DataItem {
    std::string path;
    std::string modality = "unknown";
    int rows = 0;
    int cols = 0;
    int bands = 0;
    std::string crs = "unknown";
    std::optional<std::pair<std::string, std::string>> temporal;  // (start, end)
    // per-band value summary, all four vectors sized `bands` (or empty)
    std::vector<double> min;
    std::vector<double> max;
    std::vector<double> mean;
    std::vector<double> nodata_fraction;
    json extra = json::object();

    std::string filename() const { return fs::path(path).filename().string(); }
};

// Boundary re-validation: probe scripts are untrusted, their output is not.
inline void validate(const DataItem& item) {
    if (item.path.empty()) throw ParseError("data item without a path");
    bool known = false;
    for (const auto& m : known_modalities()) known = known || m == item.modality;
    if (!known) throw ParseError("unknown modality '" + item.modality + "' for " + item.path);
    if (item.rows < 0 || item.cols < 0 || item.bands < 0)
        throw ParseError("negative dimensions for " + item.path);
    const std::size_t b = item.nodata_fraction.size();
    if (item.min.size() != b || item.max.size() != b || item.mean.size() != b)
        throw ParseError("band summary length mismatch for " + item.path);
    for (std::size_t i = 0; i < b; ++i) {
        double nf = item.nodata_fraction[i];
        if (nf < 0.0 || nf > 1.0)
            throw ParseError("nodata_fraction outside [0,1] for " + item.path);
        if (nf < 1.0) {
            if (!(item.min[i] <= item.mean[i] && item.mean[i] <= item.max[i]))
                throw ParseError("band stats violate min <= mean <= max for " + item.path);
        }
    }
}

inline json to_json(const DataItem& item) {
    json j{{"path", item.path},
           {"modality", item.modality},
           {"rows", item.rows},
           {"cols", item.cols},
           {"bands", item.bands},
           {"crs", item.crs},
           {"min", item.min},
           {"max", item.max},
           {"mean", item.mean},
           {"nodata_fraction", item.nodata_fraction}};
    if (item.temporal) j["temporal"] = {{"start", item.temporal->first},
                                        {"end", item.temporal->second}};
    if (!item.extra.empty()) j["extra"] = item.extra;
    return j;
}

inline DataItem data_item_from_json(const json& j) {
    DataItem item;
    item.path = j.at("path").get<std::string>();
    item.modality = j.value("modality", "unknown");
    item.rows = j.value("rows", 0);
    item.cols = j.value("cols", 0);
    item.bands = j.value("bands", 0);
    item.crs = j.value("crs", "unknown");
    auto vec = [&](const char* key) {
        std::vector<double> v;
        if (j.contains(key)) {
            if (j.at(key).is_array())
                v = j.at(key).get<std::vector<double>>();
            else if (j.at(key).is_number())
                v = {j.at(key).get<double>()};
        }
        return v;
    };
    item.min = vec("min");
    item.max = vec("max");
    item.mean = vec("mean");
    item.nodata_fraction = vec("nodata_fraction");
    if (j.contains("temporal") && j.at("temporal").is_object()) {
        item.temporal = {j.at("temporal").value("start", ""), j.at("temporal").value("end", "")};
    }
    if (j.contains("extra")) item.extra = j.at("extra");
    validate(item);
    return item;
}

struct DataProfile {
    std::vector<DataItem> items;
    std::string narrative;

    const DataItem* find(const std::string& name) const {
        for (const auto& item : items) {
            if (item.path == name || item.filename() == name) return &item;
        }
        return nullptr;
    }
};

inline json to_json(const DataProfile& p) {
    json items = json::array();
    for (const auto& item : p.items) items.push_back(to_json(item));
    return json{{"items", items}, {"narrative", p.narrative}};
}

// The probe contract: scripts write {"items":[...]} as profile.json.
inline DataProfile profile_from_json(const json& j) {
    DataProfile p;
    if (!j.is_object() || !j.contains("items") || !j.at("items").is_array())
        throw ParseError("profile.json must carry an items list");
    for (const auto& ij : j.at("items")) p.items.push_back(data_item_from_json(ij));
    p.narrative = j.value("narrative", "");
    return p;
}

// Deterministic narrative used when the gateway is ablated or unavailable.
inline std::string render_profile_narrative(const std::vector<DataItem>& items) {
    std::ostringstream out;
    out << items.size() << " data item" << (items.size() == 1 ? "" : "s") << ":";
    for (const auto& item : items) {
        out << "\n- " << item.filename() << " (" << item.modality << "): " << item.rows << "x"
            << item.cols << ", " << item.bands << " band" << (item.bands == 1 ? "" : "s")
            << ", crs " << item.crs;
        if (!item.min.empty()) {
            out << ", values [";
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6g", item.min[0]);
            out << buf << ", ";
            std::snprintf(buf, sizeof(buf), "%.6g", item.max[0]);
            out << buf << "]";
        }
        if (!item.nodata_fraction.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4g", item.nodata_fraction[0]);
            out << ", invalid fraction " << buf;
        }
    }
    return out.str();
}

}  // namespace geoflow
