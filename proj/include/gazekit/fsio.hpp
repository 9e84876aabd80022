#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gazekit {

// Writes bytes to path via a temporary file and rename, so readers never
// observe a partially written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace gazekit
