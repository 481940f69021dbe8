#pragma once

// Canned Python bodies used as scripted-backend fixtures.

#include <string>

namespace testutil {

// Probe that parses ASCII grids named in GF_DATA_POINTERS and writes the
// profile.json contract.
inline std::string probe_body(const std::string& modality = "multispectral") {
    return std::string(R"PY(import json, os

def read_grid(path):
    with open(path) as f:
        hdr = {}
        for _ in range(6):
            k, v = f.readline().split()
            hdr[k.lower()] = float(v)
        rows, cols = int(hdr["nrows"]), int(hdr["ncols"])
        nodata = hdr["nodata_value"]
        vals = []
        for _ in range(rows):
            vals.extend(float(t) for t in f.readline().split())
    valid = [v for v in vals if v != nodata]
    frac = 1.0 - (len(valid) / len(vals)) if vals else 0.0
    if valid:
        mn, mx, mean = min(valid), max(valid), sum(valid) / len(valid)
    else:
        mn = mx = mean = 0.0
    return rows, cols, mn, mx, mean, frac

items = []
for p in os.environ["GF_DATA_POINTERS"].splitlines():
    rows, cols, mn, mx, mean, frac = read_grid(p)
    items.append({"path": p, "modality": ")PY") +
           modality + R"PY(", "rows": rows, "cols": cols,
                  "bands": 1, "crs": "local-grid",
                  "min": [mn], "max": [mx], "mean": [mean], "nodata_fraction": [frac]})
json.dump({"items": items}, open("profile.json", "w"))
)PY";
}

inline std::string crashing_probe_body() {
    return "raise RuntimeError('cannot open raster')\n";
}

inline std::string bad_profile_probe_body() {
    // Writes a profile that violates the nodata_fraction invariant.
    return R"PY(import json, os
items = [{"path": p, "modality": "multispectral", "rows": 1, "cols": 1, "bands": 1,
          "crs": "x", "min": [0], "max": [1], "mean": [0.5], "nodata_fraction": [2.0]}
         for p in os.environ["GF_DATA_POINTERS"].splitlines()]
json.dump({"items": items}, open("profile.json", "w"))
)PY";
}

// Creates every declared output file and a passing manifest. Works for any
// node whose outputs carry non-index kinds.
inline std::string generic_node_body() {
    return R"PY(import json, os
outs = [l.split("=", 1) for l in os.environ["GF_OUTPUTS"].splitlines() if l]
arts = []
for name, rel in outs:
    d = os.path.dirname(rel)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(rel, "w") as f:
        f.write("data for " + name + "\n")
    arts.append({"name": name, "path": rel, "kind": "table", "stats": None})
json.dump({"artifacts": arts, "results": {"ok": 1}}, open("manifest.json", "w"))
)PY";
}

inline std::string failing_node_body(const std::string& marker = "k-fail") {
    return "raise RuntimeError('" + marker + "')\n";
}

// Writes a 2x2 grid to the single declared output; `peak` above 1 makes a
// normalized index fail its analytic range.
inline std::string index_node_body(double peak) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", peak);
    return std::string(R"PY(import json, os
outs = [l.split("=", 1) for l in os.environ["GF_OUTPUTS"].splitlines() if l]
name, rel = outs[0]
vals = [0.1, 0.5, )PY") + buf + R"PY(, -0.2]
with open(rel, "w") as f:
    f.write("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value -9999\n")
    f.write("%g %g\n%g %g\n" % tuple(vals))
json.dump({"artifacts": [{"name": name, "path": rel, "kind": "raster", "stats": None}],
           "results": None}, open("manifest.json", "w"))
)PY";
}

}  // namespace testutil
