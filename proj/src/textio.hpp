#pragma once

// Tiny text-file and CSV helpers shared by the runner sources. All floats go
// through fmt17 (17 significant digits), which round-trips doubles exactly
// and keeps rerun outputs byte-identical.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdlab::textio {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    const std::string text = read_file(path);
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
    table.header = split_csv_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != table.header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(table.header.size()) + " columns, got " +
                                     std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].empty()) {
                row[i] = std::nan("");
                continue;
            }
            const char* begin = cells[i].c_str();
            char* end = nullptr;
            row[i] = std::strtod(begin, &end);
            // non-numeric cells (e.g. status labels) read as NaN so numeric
            // columns of mixed tables stay accessible
            if (end == begin) row[i] = std::nan("");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Index of a named column; the error names both the column and the file.
inline std::size_t column_of(const CsvTable& table, const std::string& name,
                             const std::string& path) {
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == name) return i;
    std::string have;
    for (const auto& h : table.header) have += (have.empty() ? "" : ", ") + h;
    throw std::runtime_error("missing column '" + name + "' in " + path + " (have: " + have +
                             ")");
}

inline std::vector<double> column_values(const CsvTable& table, const std::string& name,
                                         const std::string& path) {
    const std::size_t idx = column_of(table, name, path);
    std::vector<double> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) out.push_back(row[idx]);
    return out;
}

}  // namespace sgdlab::textio
