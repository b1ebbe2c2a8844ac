#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hydroie {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// Raised for invalid configuration or arguments (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when input files cannot be read or decoded.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Returns true when `s` is well-formed UTF-8 (no overlongs or surrogates).
bool is_valid_utf8(std::string_view s);

// Lowercase hex SHA-256 digest of `data`.
std::string sha256_hex(std::string_view data);

// Reads a whole file as bytes. Throws InputError naming the path.
std::string read_file(const std::filesystem::path& path);

// Writes via a temporary sibling and rename, so readers never observe a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Serializes with sorted keys and a trailing newline. Invalid UTF-8 inside
// strings is replaced rather than thrown.
std::string dump_pretty(const json& j);
std::string dump_compact(const json& j);

// Truncates to at most `max_bytes`, cutting on a UTF-8 boundary.
std::string excerpt(std::string_view s, std::size_t max_bytes = 500);

// Three-decimal fixed formatting used by every rendered table.
std::string fmt3(double v);

}  // namespace hydroie
