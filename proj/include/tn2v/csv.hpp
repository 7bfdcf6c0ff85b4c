#pragma once

#include "common.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tn2v::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    // from_chars rejects a leading '+'
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Reads a dense numeric matrix; blank lines and '#' comments are skipped.
// Every row must have the same number of columns.
inline Matrix read_matrix(const std::filesystem::path& path, char delim = ',') {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::vector<double> row;
        for (auto field : split(t, delim)) {
            double v;
            if (!parse_double(field, v))
                throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": not a number: '" +
                                   std::string(trim(field)) + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(rows.front().size()) + " columns, got " +
                               std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline void write_matrix(std::ostream& out, const Matrix& m, char delim = ',') {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << delim;
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m, char delim = ',') {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_matrix(out, m, delim);
}

} // namespace tn2v::csv
