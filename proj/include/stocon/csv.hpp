#pragma once

#include <filesystem>
#include <string>

namespace stocon {

/// Shortest decimal text that round-trips the double (to_chars); "nan",
/// "inf"/"-inf" spelled literally. Keeps CSV output byte-stable.
std::string fmt_double(double v);

/// Writes to a temporary file in the target directory, then renames into
/// place, so readers never observe partial files.
void write_file_atomic(const std::filesystem::path& target, const std::string& contents);

}  // namespace stocon
