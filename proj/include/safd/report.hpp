#pragma once

// Structured experiment reports: one JSON document per run with config,
// tables and verdicts, plus CSV and SVG emitters. Serialization is
// deterministic so seeded runs are byte-identical.

#include <fstream>
#include <string>
#include <vector>

#include "safd/errors.hpp"
#include "safd/measure.hpp"
#include "safd/model.hpp"

namespace safd {

inline constexpr const char* kVersion = "0.1.0";

enum class VerdictStatus { Pass, Fail, Observation };

inline const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Pass: return "pass";
        case VerdictStatus::Fail: return "fail";
        default: return "observation";
    }
}

// JSON cannot carry inf/nan; report them as strings.
inline json json_number(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

class Report {
public:
    Report(std::string experiment, uint64_t seed) {
        j_["experiment"] = std::move(experiment);
        j_["config"] = json::object();
        j_["tables"] = json::array();
        j_["verdicts"] = json::array();
        j_["seed"] = seed;
        j_["version"] = kVersion;
    }

    json& config() { return j_["config"]; }

    void add_table(const std::string& name, std::vector<std::string> columns,
                   std::vector<std::vector<json>> rows) {
        json t;
        t["name"] = name;
        t["columns"] = columns;
        t["rows"] = rows;
        j_["tables"].push_back(std::move(t));
    }

    void add_verdict(const std::string& name, VerdictStatus status, double value, double tolerance,
                     const std::string& detail = "") {
        json v;
        v["name"] = name;
        v["status"] = to_string(status);
        v["value"] = json_number(value);
        v["tolerance"] = json_number(tolerance);
        if (status == VerdictStatus::Fail)
            v["margin"] = json_number(value - tolerance); // by how much the tolerance was missed
        if (!detail.empty()) v["detail"] = detail;
        j_["verdicts"].push_back(std::move(v));
    }

    bool any_fail() const {
        for (const auto& v : j_["verdicts"])
            if (v.at("status") == "fail") return true;
        return false;
    }

    const json& doc() const { return j_; }

    std::string to_json_string() const { return j_.dump(2) + "\n"; }

    // One CSV block per table, blank-line separated.
    std::string to_csv() const {
        std::string out;
        for (const auto& t : j_["tables"]) {
            out += "# " + t.at("name").get<std::string>() + "\n";
            const auto& cols = t.at("columns");
            for (size_t c = 0; c < cols.size(); ++c) {
                if (c) out += ",";
                out += cols[c].get<std::string>();
            }
            out += "\n";
            for (const auto& row : t.at("rows")) {
                for (size_t c = 0; c < row.size(); ++c) {
                    if (c) out += ",";
                    if (row[c].is_string())
                        out += row[c].get<std::string>();
                    else
                        out += row[c].dump();
                }
                out += "\n";
            }
            out += "\n";
        }
        return out;
    }

private:
    json j_;
};

// Plain scatter of the first atoms of a cloud, mapped into a fixed viewport.
inline std::string svg_scatter(const DiscreteMeasure& m, size_t max_atoms = 50000) {
    const int W = 640, H = 640, pad = 20;
    size_t n = std::min(m.size(), max_atoms);
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    if (n) {
        xlo = ylo = std::numeric_limits<double>::infinity();
        xhi = yhi = -xlo;
        for (size_t i = 0; i < n; ++i) {
            double x = m.pts[i * m.d];
            double y = m.d > 1 ? m.pts[i * m.d + 1] : 0.0;
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
        if (xhi <= xlo) xhi = xlo + 1;
        if (yhi <= ylo) yhi = ylo + 1;
    }
    char buf[160];
    std::string svg;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n", W, H);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (size_t i = 0; i < n; ++i) {
        double x = m.pts[i * m.d];
        double y = m.d > 1 ? m.pts[i * m.d + 1] : 0.0;
        double px = pad + (x - xlo) / (xhi - xlo) * (W - 2 * pad);
        double py = H - pad - (y - ylo) / (yhi - ylo) * (H - 2 * pad);
        std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"0.6\" fill=\"black\"/>\n",
                      px, py);
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out << content;
}

} // namespace safd
