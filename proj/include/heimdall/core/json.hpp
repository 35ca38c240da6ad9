#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace heimdall {

/// Insertion-ordered JSON keeps every serialized artifact byte-stable.
using Json = nlohmann::ordered_json;

namespace json_field {

// Strict accessors. All of them throw ProtocolError naming `key` (prefixed
// by `path` when non-empty) on a missing field or a wrong type.

const Json& require(const Json& obj, std::string_view key, std::string_view path = {});
bool has(const Json& obj, std::string_view key);

std::string get_string(const Json& obj, std::string_view key, std::string_view path = {});
std::int64_t get_int(const Json& obj, std::string_view key, std::string_view path = {});
double get_number(const Json& obj, std::string_view key, std::string_view path = {});
bool get_bool(const Json& obj, std::string_view key, std::string_view path = {});

/// Number in the closed interval [lo, hi].
double get_number_in(const Json& obj, std::string_view key, double lo, double hi,
                     std::string_view path = {});
std::int64_t get_int_in(const Json& obj, std::string_view key, std::int64_t lo, std::int64_t hi,
                        std::string_view path = {});

void require_object(const Json& obj, std::string_view path);

}  // namespace json_field

/// Reads and parses a JSON file. Throws ConfigError when the file cannot be
/// read and ValidationError "<what> <file>: malformed JSON at byte N".
Json read_json_file(const std::filesystem::path& file, std::string_view what);

}  // namespace heimdall
