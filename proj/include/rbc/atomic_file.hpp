#pragma once

#include <string>
#include <string_view>

namespace rbc {

/// Write `content` to a temporary file next to `path`, then rename it over
/// `path`. On failure the target is left untouched and std::ios_base::failure
/// is thrown.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace rbc
