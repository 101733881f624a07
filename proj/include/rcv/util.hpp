#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rcv {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Hex-encoded SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view data);

/// Hex-encoded SHA-256 of a file's contents. Throws on unreadable path.
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Write-to-temp then rename, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Current UTC date as YYYY-MM-DD.
std::string utc_day_stamp();

std::vector<std::string> split_lines(std::string_view text);

}  // namespace rcv
