#pragma once

#include <filesystem>
#include <string>

namespace fabl::io {

/// Shortest decimal form that round-trips to the same double via from_chars;
/// locale-independent.
std::string format_double(double v);
std::string format_int(long long v);

/// Writes content to a temp file beside the target, then renames it into
/// place; readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace fabl::io
