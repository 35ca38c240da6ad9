#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/protocol/envelope.hpp"
#include "heimdall/risk/risk_engine.hpp"

namespace heimdall::feeds {

struct FeedEntry {
    std::int64_t t_ms = 0;
    std::string source;
    double severity = 0.0;
    std::int64_t ttl_ms = 1;
    std::string desc;

    bool operator==(const FeedEntry&) const = default;
};

/// Entries sorted by t_ms (non-decreasing).
struct FeedScript {
    std::vector<FeedEntry> entries;

    bool operator==(const FeedScript&) const = default;
};

bool is_known_source(std::string_view source) noexcept;

/// Parses the line-oriented script format, one JSON object per line:
/// {"t_ms":int,"source":"weather|civil_protection|public_utility",
///  "severity":0..1,"ttl_ms":int,"desc":"..."}. Blank lines are skipped.
/// Errors are ValidationErrors naming the 1-based line, e.g.
/// "severity out of range line 3".
FeedScript parse_feed_script(std::string_view text);

/// Same checks over an in-memory script; `what` prefixes error locations
/// ("line" for files, "feed_script entry" for scenario arrays).
void validate_feed_script(const FeedScript& script, std::string_view what = "line");

FeedEntry feed_entry_from_json(const Json& j, std::size_t line, std::string_view what = "line");
Json to_json(const FeedEntry& e);
std::string format_feed_script(const FeedScript& script);

/// Merges scripts by time; ties keep the order of the input scripts.
FeedScript merge_feed_scripts(const std::vector<FeedScript>& scripts);

risk::RiskSignal to_signal(const FeedEntry& e, const std::map<std::string, double>& weights);

/// The envelopes a feed source sends for a script: one FEED_UPDATE per
/// entry plus a HEARTBEAT at every distinct expiry time, so the receiver's
/// clock reaches each expiry even when nothing else happens. Heartbeats sort
/// before updates at the same instant; expiries past `horizon_ms` are
/// omitted. Seq runs 1..n in timeline order.
std::vector<protocol::Envelope> feed_timeline(const FeedScript& script,
                                              const std::map<std::string, double>& weights,
                                              const std::string& sender,
                                              std::optional<std::int64_t> horizon_ms = std::nullopt);

using FeedSink = std::function<void(const protocol::Envelope&)>;

/// Validates the script, then hands every feed_timeline envelope to `sink`.
void run_feed(const FeedScript& script, const std::map<std::string, double>& weights,
              const std::string& sender, const FeedSink& sink,
              std::optional<std::int64_t> horizon_ms = std::nullopt);

}  // namespace heimdall::feeds
