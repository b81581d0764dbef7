#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace amata {

// Writes to "<path>.tmp" and renames over `path`, so readers only ever see
// the old file or the complete new one.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Reads a file, inflating it first when it carries the gzip magic.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path);

}  // namespace amata
