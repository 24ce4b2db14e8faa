#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "congrec/errors.hpp"

namespace congrec {

// Minimal CSV support for the flat, unquoted schemas this library reads and
// writes. Fields may not contain commas; values are plain tokens.

struct CsvRow {
    std::size_t line_number;  // 1-based, header included in the count
    std::vector<std::string> fields;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

// Reads a CSV file, checks the header matches exactly, returns the data rows.
// Blank lines are skipped; carriage returns are stripped.
inline std::vector<CsvRow> read_csv(const std::string& path,
                                    const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t line_number = 0;
    bool header_seen = false;
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != expected_header) {
                throw ParseError(path, line_number,
                                 "expected header '" + expected_header + "', got '" +
                                     line + "'");
            }
            header_seen = true;
            continue;
        }
        rows.push_back({line_number, split_csv_line(line)});
    }
    if (!header_seen) throw ParseError(path, 1, "missing header '" + expected_header + "'");
    return rows;
}

inline std::int64_t parse_int(const std::string& field, const std::string& path,
                              std::size_t line) {
    std::int64_t v = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(path, line, "expected an integer, got '" + field + "'");
    }
    return v;
}

inline double parse_double(const std::string& field, const std::string& path,
                           std::size_t line) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(path, line, "expected a number, got '" + field + "'");
    }
    return v;
}

// Fixed, locale-independent float formatting so identical values always
// produce identical bytes in reports.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw IoError("cannot create " + path);
        out_ << header << '\n';
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void close() { out_.close(); }

  private:
    std::ofstream out_;
};

}  // namespace congrec
