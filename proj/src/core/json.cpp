#include "heimdall/core/json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <limits>

#include "heimdall/core/error.hpp"

namespace heimdall::json_field {

namespace {

std::string qualified(std::string_view path, std::string_view key) {
    if (path.empty()) {
        return std::string(key);
    }
    std::string out(path);
    out += '.';
    out += key;
    return out;
}

[[noreturn]] void fail(std::string_view path, std::string_view key, const std::string& what) {
    throw ProtocolError(qualified(path, key) + ": " + what, std::string(key));
}

}  // namespace

void require_object(const Json& obj, std::string_view path) {
    if (!obj.is_object()) {
        const std::string name = path.empty() ? std::string("document") : std::string(path);
        throw ProtocolError(name + ": expected object", std::string(path));
    }
}

bool has(const Json& obj, std::string_view key) {
    return obj.is_object() && obj.contains(key);
}

const Json& require(const Json& obj, std::string_view key, std::string_view path) {
    require_object(obj, path);
    const auto it = obj.find(key);
    if (it == obj.end()) {
        fail(path, key, "missing field");
    }
    return *it;
}

std::string get_string(const Json& obj, std::string_view key, std::string_view path) {
    const Json& v = require(obj, key, path);
    if (!v.is_string()) {
        fail(path, key, "expected string");
    }
    return v.get<std::string>();
}

std::int64_t get_int(const Json& obj, std::string_view key, std::string_view path) {
    const Json& v = require(obj, key, path);
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            fail(path, key, "integer overflow");
        }
        return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) {
        fail(path, key, "expected integer");
    }
    return v.get<std::int64_t>();
}

double get_number(const Json& obj, std::string_view key, std::string_view path) {
    const Json& v = require(obj, key, path);
    if (!v.is_number()) {
        fail(path, key, "expected number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        fail(path, key, "expected finite number");
    }
    return d;
}

bool get_bool(const Json& obj, std::string_view key, std::string_view path) {
    const Json& v = require(obj, key, path);
    if (!v.is_boolean()) {
        fail(path, key, "expected boolean");
    }
    return v.get<bool>();
}

double get_number_in(const Json& obj, std::string_view key, double lo, double hi,
                     std::string_view path) {
    const double d = get_number(obj, key, path);
    if (d < lo || d > hi) {
        fail(path, key,
             "value " + Json(d).dump() + " out of range [" + Json(lo).dump() + ", " +
                 Json(hi).dump() + "]");
    }
    return d;
}

std::int64_t get_int_in(const Json& obj, std::string_view key, std::int64_t lo, std::int64_t hi,
                        std::string_view path) {
    const std::int64_t v = get_int(obj, key, path);
    if (v < lo || v > hi) {
        fail(path, key,
             "value " + std::to_string(v) + " out of range [" + std::to_string(lo) + ", " +
                 std::to_string(hi) + "]");
    }
    return v;
}

}  // namespace heimdall::json_field

namespace heimdall {

Json read_json_file(const std::filesystem::path& file, std::string_view what) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + std::string(what) + " " + file.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return Json::parse(buffer.str());
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string(what) + " " + file.string() + ": malformed JSON at byte " +
                                  std::to_string(e.byte),
                              std::string(what));
    }
}

}  // namespace heimdall
