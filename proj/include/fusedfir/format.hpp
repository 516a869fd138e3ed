#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fusedfir {

/// Decimal text of `value` with 17 significant digits (round-trips exactly).
std::string format_double(double value);

/// Writes `content` to `path`, replacing any existing file. Throws DataError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

} // namespace fusedfir
