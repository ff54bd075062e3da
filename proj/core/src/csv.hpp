#pragma once

// Minimal reader for the comma-separated files this library writes.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bhtwa/error.hpp"

namespace bhtwa::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("csv: no column '" + name + "'");
    }

    double num(std::size_t row, std::size_t col) const { return std::stod(rows[row][col]); }

    std::vector<double> numbers(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> v;
        v.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) v.push_back(num(r, c));
        return v;
    }
};

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw ConfigError(path.string() + ": ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace bhtwa::csv
