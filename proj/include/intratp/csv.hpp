#pragma once

// Deterministic numeric formatting and minimal CSV plumbing.  All numbers
// are written with std::to_chars (shortest round-trip representation), so
// re-serializing identical data yields byte-identical files.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "intratp/errors.hpp"

namespace intratp::csvio {

/// Shortest round-trip decimal representation; negative zero normalizes
/// to "0".
inline std::string format_double(double value) {
    if (value == 0.0) {
        value = 0.0;  // collapse -0.0
    }
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

inline std::string format_size(std::size_t value) {
    char buffer[24];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
        throw ValidationError(context + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

inline std::size_t parse_index(std::string_view text, const std::string& context) {
    std::size_t value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
        throw ValidationError(context + ": cannot parse index '" + std::string(text) + "'");
    }
    return value;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

/// Whole-file CSV reader with a mandatory exact header.  Returns data rows
/// (split fields) paired with their 1-based line numbers for diagnostics.
/// Carriage returns are stripped; blank trailing lines are ignored.
struct CsvRow {
    std::size_t line_number = 0;
    std::vector<std::string> fields;
};

inline std::vector<CsvRow> read_csv(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open file '" + path + "'");
    }
    std::vector<CsvRow> rows;
    std::string line;
    std::size_t line_number = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!header_seen) {
            if (line != expected_header) {
                throw ValidationError("'" + path + "' line 1: expected header '" +
                                      expected_header + "', found '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        rows.push_back(CsvRow{line_number, split_fields(line)});
    }
    if (!header_seen) {
        throw ValidationError("'" + path + "' is empty (missing header)");
    }
    return rows;
}

/// Buffered line writer; the file is written in one piece by an explicit
/// finish() call, so a failed run never leaves a half-written file behind.
class CsvWriter {
public:
    explicit CsvWriter(std::string path) : path_(std::move(path)) {}

    void line(const std::string& text) {
        buffer_ += text;
        buffer_ += '\n';
    }

    void finish() {
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ValidationError("cannot write file '" + path_ + "'");
        }
        out << buffer_;
        if (!out) {
            throw ValidationError("write failed for '" + path_ + "'");
        }
    }

private:
    std::string path_;
    std::string buffer_;
};

}  // namespace intratp::csvio
