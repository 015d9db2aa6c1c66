#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace detect {

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace detect
