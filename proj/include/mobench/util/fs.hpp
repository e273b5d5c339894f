#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mobench::fs {

namespace stdfs = std::filesystem;

/// Reads a whole file as bytes. Throws mobench::Error if it cannot be opened.
std::string read_file(const stdfs::path& path);

/// Writes to `<path>.tmp` then renames over `path`, so readers never observe
/// a partially written file.
void write_file_atomic(const stdfs::path& path, std::string_view data);

void write_file(const stdfs::path& path, std::string_view data);

}  // namespace mobench::fs
