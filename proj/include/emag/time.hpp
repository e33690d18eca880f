#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace emag {

using Timestamp = std::chrono::sys_seconds;

inline Timestamp from_unix(std::int64_t secs) {
  return Timestamp{std::chrono::seconds{secs}};
}
inline std::int64_t to_unix(Timestamp t) { return t.time_since_epoch().count(); }

/// "2024-03-01T12:00:00Z"
std::string format_iso8601(Timestamp t);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SSZ" and numeric offsets
/// ("+05:30"). Fractional seconds are dropped.
std::optional<Timestamp> parse_iso8601(std::string_view s);

/// RFC 822 / RFC 1123 dates as found in RSS pubDate, e.g.
/// "Tue, 10 Jun 2003 04:00:00 GMT" or "10 Jun 2003 04:00 +0200".
std::optional<Timestamp> parse_rfc822(std::string_view s);

using Clock = std::function<Timestamp()>;

Clock system_clock();

inline double hours_between(Timestamp from, Timestamp to) {
  return static_cast<double>((to - from).count()) / 3600.0;
}

}  // namespace emag
