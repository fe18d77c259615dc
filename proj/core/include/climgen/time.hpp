#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace climgen {

/// Seconds since 1970-01-01T00:00 in the site's local standard time. No
/// time-zone or DST handling: timestamps are naive wall-clock instants.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
};

Timestamp to_timestamp(const CivilTime& c);
CivilTime to_civil(Timestamp t);

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS]` and the same with a space
/// separator. Returns nullopt on anything else, including invalid dates.
std::optional<Timestamp> parse_iso8601(std::string_view text);
/// `YYYY-MM-DDTHH:MM`.
std::string format_iso8601(Timestamp t);

int month_of(Timestamp t);
int hour_of(Timestamp t);
/// 1-based day of year.
int day_of_year(Timestamp t);
/// Midnight at the start of `t`'s day.
Timestamp day_start(Timestamp t);
bool is_leap_year(int year);

}  // namespace climgen
