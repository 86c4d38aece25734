#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crgimsc/types.hpp"

namespace crgimsc {

// Header-free CSV of decimal numbers, one matrix row per line.
inline Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    std::vector<std::vector<Real>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<Real> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("bad numeric value '" + cell + "' in " + path);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged csv row in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty csv file: " + path);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

// %.17g keeps doubles bit-exact through a write/read cycle
inline std::string format_real(Real x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

template <typename Derived>
void write_csv_matrix(const std::string& path, const Eigen::MatrixBase<Derived>& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv file: " + path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_real(static_cast<Real>(m(i, j)));
        }
        out << '\n';
    }
}

inline std::vector<int> read_csv_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open labels file: " + path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        labels.push_back(std::stoi(line));
    }
    if (labels.empty()) throw std::runtime_error("empty labels file: " + path);
    return labels;
}

inline void write_csv_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write labels file: " + path);
    for (int l : labels) out << l << '\n';
}

} // namespace crgimsc
