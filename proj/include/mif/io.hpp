#pragma once

#include <filesystem>
#include <string>

namespace mif {

// Both throw IoError naming the path.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mif
