#pragma once

#include <string>

namespace udn {

// Shortest decimal form that round-trips; "nan"/"inf" for non-finite.
std::string format_double(double v);

// Writes to a temporary sibling file and renames it over the target, so a
// failure partway through never leaves a truncated output behind.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace udn
