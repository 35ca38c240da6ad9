#include "heimdall/feeds/feed_script.hpp"

#include <algorithm>
#include <set>

#include "heimdall/core/error.hpp"

namespace heimdall::feeds {

namespace {

std::string at_line(std::string_view what, std::size_t line) {
    return " " + std::string(what) + " " + std::to_string(line);
}

}  // namespace

bool is_known_source(std::string_view source) noexcept {
    return source == risk::kWeather || source == risk::kCivilProtection ||
           source == risk::kPublicUtility;
}

FeedEntry feed_entry_from_json(const Json& j, std::size_t line, std::string_view what) {
    using namespace json_field;
    const std::string where = at_line(what, line);
    try {
        require_object(j, "");
        FeedEntry e;
        e.t_ms = get_int(j, "t_ms");
        e.source = get_string(j, "source");
        e.severity = get_number(j, "severity");
        e.ttl_ms = get_int(j, "ttl_ms");
        e.desc = has(j, "desc") ? get_string(j, "desc") : std::string();
        return e;
    } catch (const ProtocolError& err) {
        throw ValidationError(std::string(err.what()) + where, err.field());
    }
}

Json to_json(const FeedEntry& e) {
    Json j = Json::object();
    j["t_ms"] = e.t_ms;
    j["source"] = e.source;
    j["severity"] = e.severity;
    j["ttl_ms"] = e.ttl_ms;
    j["desc"] = e.desc;
    return j;
}

namespace {

void validate_entry(const FeedEntry& e, const std::string& where) {
    if (e.t_ms < 0) {
        throw ValidationError("negative time" + where, "t_ms");
    }
    if (!is_known_source(e.source)) {
        throw ValidationError("unknown source " + e.source + where, "source");
    }
    if (!(e.severity >= 0.0 && e.severity <= 1.0)) {
        throw ValidationError("severity out of range" + where, "severity");
    }
    if (e.ttl_ms <= 0) {
        throw ValidationError("ttl_ms must be > 0" + where, "ttl_ms");
    }
}

}  // namespace

void validate_feed_script(const FeedScript& script, std::string_view what) {
    for (std::size_t i = 0; i < script.entries.size(); ++i) {
        const std::string where = at_line(what, i + 1);
        validate_entry(script.entries[i], where);
        if (i > 0 && script.entries[i].t_ms < script.entries[i - 1].t_ms) {
            throw ValidationError("non-monotone time" + where, "t_ms");
        }
    }
}

FeedScript parse_feed_script(std::string_view text) {
    // Line numbers count every physical line, blank ones included.
    FeedScript script;
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line;
        pos = nl == std::string_view::npos ? text.size() : nl + 1;

        if (raw.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        Json j;
        try {
            j = Json::parse(raw);
        } catch (const Json::parse_error& err) {
            throw ValidationError("malformed JSON at byte " + std::to_string(err.byte) +
                                      at_line("line", line),
                                  "line");
        }
        FeedEntry e = feed_entry_from_json(j, line);
        const std::string where = at_line("line", line);
        validate_entry(e, where);
        if (!script.entries.empty() && e.t_ms < script.entries.back().t_ms) {
            throw ValidationError("non-monotone time" + where, "t_ms");
        }
        script.entries.push_back(std::move(e));
    }
    return script;
}

std::string format_feed_script(const FeedScript& script) {
    std::string out;
    for (const FeedEntry& e : script.entries) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

FeedScript merge_feed_scripts(const std::vector<FeedScript>& scripts) {
    struct Tagged {
        const FeedEntry* entry;
        std::size_t script;
        std::size_t index;
    };
    std::vector<Tagged> all;
    for (std::size_t s = 0; s < scripts.size(); ++s) {
        for (std::size_t i = 0; i < scripts[s].entries.size(); ++i) {
            all.push_back({&scripts[s].entries[i], s, i});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
        if (a.entry->t_ms != b.entry->t_ms) {
            return a.entry->t_ms < b.entry->t_ms;
        }
        return a.script < b.script;
    });
    FeedScript merged;
    for (const Tagged& t : all) {
        merged.entries.push_back(*t.entry);
    }
    return merged;
}

risk::RiskSignal to_signal(const FeedEntry& e, const std::map<std::string, double>& weights) {
    risk::RiskSignal s;
    s.source_id = e.source;
    s.severity = e.severity;
    const auto it = weights.find(e.source);
    s.weight = it == weights.end() ? 1.0 : it->second;
    s.issued_sim_time_ms = e.t_ms;
    s.ttl_ms = e.ttl_ms;
    s.description = e.desc;
    return s;
}

std::vector<protocol::Envelope> feed_timeline(const FeedScript& script,
                                              const std::map<std::string, double>& weights,
                                              const std::string& sender,
                                              std::optional<std::int64_t> horizon_ms) {
    std::set<std::int64_t> expiries;
    for (const FeedEntry& e : script.entries) {
        const std::int64_t at = e.t_ms + e.ttl_ms;
        if (!horizon_ms || at <= *horizon_ms) {
            expiries.insert(at);
        }
    }
    std::vector<protocol::Envelope> out;
    std::uint64_t seq = 0;
    auto tick = expiries.begin();
    const auto flush_ticks = [&](std::int64_t until) {
        for (; tick != expiries.end() && *tick <= until; ++tick) {
            out.push_back(protocol::make_heartbeat(sender, ++seq, *tick, {"feed", std::nullopt}));
        }
    };
    for (const FeedEntry& e : script.entries) {
        flush_ticks(e.t_ms);
        out.push_back(protocol::make_feed_update(sender, ++seq, to_signal(e, weights)));
    }
    flush_ticks(INT64_MAX);
    return out;
}

void run_feed(const FeedScript& script, const std::map<std::string, double>& weights,
              const std::string& sender, const FeedSink& sink,
              std::optional<std::int64_t> horizon_ms) {
    validate_feed_script(script);
    for (const protocol::Envelope& env : feed_timeline(script, weights, sender, horizon_ms)) {
        sink(env);
    }
}

}  // namespace heimdall::feeds
