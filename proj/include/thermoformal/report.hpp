#pragma once
#include <string>
#include <vector>
#include <json.hpp>
#include "thermoformal/numfmt.hpp"

namespace tf {

using json = nlohmann::ordered_json;

// one verification row: value checked against bound, margin signed so that
// positive always means pass
struct CheckRow {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool pass = false;
    bool gating = true;
    std::string note;
};

inline json jnum(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

struct Report {
    std::vector<CheckRow> rows;

    void add(CheckRow r) { rows.push_back(std::move(r)); }
    void add(const std::string& name, double value, double bound, double margin,
             bool pass, bool gating = true, const std::string& note = "") {
        rows.push_back(CheckRow{name, value, bound, margin, pass, gating, note});
    }
    const CheckRow* find(const std::string& name) const {
        for (auto& r : rows) if (r.name == name) return &r;
        return nullptr;
    }
    bool all_gating_pass() const {
        for (auto& r : rows) if (r.gating && !r.pass) return false;
        return true;
    }
    json to_json() const {
        json arr = json::array();
        for (auto& r : rows) {
            json o;
            o["name"] = r.name;
            o["value"] = jnum(r.value);
            o["bound"] = jnum(r.bound);
            o["margin"] = jnum(r.margin);
            o["pass"] = r.pass;
            o["gating"] = r.gating;
            if (!r.note.empty()) o["note"] = r.note;
            arr.push_back(o);
        }
        return arr;
    }
};

} // namespace tf
