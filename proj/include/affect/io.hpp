#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace affect {

// Reads a whole file as bytes. Throws IoError.
std::string read_file(const std::filesystem::path& path);

// Writes bytes to a temporary sibling and renames it over `path`, so readers
// never observe a partially written file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace affect
