#pragma once

// Internal text-serialization helpers shared by the file-format code.
// Numbers are written with std::to_chars shortest round-trip form and read
// back with std::from_chars, so save/load cycles are value-exact and
// locale-independent.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fabl/error.hpp"
#include "fabl/io.hpp"

namespace fabl::detail {

using io::format_double;
using io::format_int;
using io::write_file_atomic;

inline double parse_double(std::string_view token, const std::string& context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw Error(ErrorCode::parse_error,
                    context + ": expected a real number, got '" + std::string(token) + "'");
    return value;
}

inline long long parse_int(std::string_view token, const std::string& context) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw Error(ErrorCode::parse_error,
                    context + ": expected an integer, got '" + std::string(token) + "'");
    return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

/// Reads a whole text file, splitting lines and tracking 1-based line
/// numbers for error reporting. Blank lines and '#' comment lines are
/// skipped by next().
class LineReader {
  public:
    explicit LineReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error(ErrorCode::io_error, "cannot open '" + path_ + "' for reading");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines_.push_back(std::move(line));
        }
        if (in.bad())
            throw Error(ErrorCode::io_error, "read failure on '" + path_ + "'");
    }

    /// Next non-blank, non-comment line, or false at end of file.
    bool next(std::string_view& line) {
        while (cursor_ < lines_.size()) {
            const std::string& l = lines_[cursor_++];
            size_t i = 0;
            while (i < l.size() && (l[i] == ' ' || l[i] == '\t')) ++i;
            if (i == l.size() || l[i] == '#') continue;
            line = l;
            return true;
        }
        return false;
    }

    std::string_view require(const std::string& what) {
        std::string_view line;
        if (!next(line))
            throw Error(ErrorCode::parse_error, where() + ": unexpected end of file, expected " + what);
        return line;
    }

    /// Location of the line most recently returned.
    std::string where() const { return path_ + ":" + std::to_string(cursor_); }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::vector<std::string> lines_;
    size_t cursor_ = 0;
};

} // namespace fabl::detail
