#pragma once
#include <cstdio>
#include <string>
#include <vector>
#include <fstream>
#include <stdexcept>
#include <cmath>
#include <limits>

namespace tf {

// shortest round-trip decimal form (gcc 11 has no std::format)
inline std::string g17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

struct CsvWriter {
    std::ofstream out;
    size_t ncols = 0;
    CsvWriter(const std::string& path, const std::vector<std::string>& header) {
        out.open(path);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        ncols = header.size();
        for (size_t i = 0; i < header.size(); ++i)
            out << header[i] << (i + 1 < header.size() ? "," : "\n");
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i)
            out << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace tf
