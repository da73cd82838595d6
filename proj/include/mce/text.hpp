#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small locale-independent text helpers shared by the file readers and writers.
namespace mce::text {

/// Parses a full token as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);

/// Shortest representation that round-trips exactly.
std::string format_roundtrip(double value);

/// Fixed count of significant digits (report output).
std::string format_sig(double value, int digits = 15);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a digest, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mce::text
