#include "climgen/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace climgen {

namespace chr = std::chrono;

Timestamp to_timestamp(const CivilTime& c) {
  const chr::sys_days days{chr::year{c.year} / chr::month{static_cast<unsigned>(c.month)} /
                           chr::day{static_cast<unsigned>(c.day)}};
  return days.time_since_epoch().count() * kSecondsPerDay + c.hour * kSecondsPerHour +
         c.minute * 60 + c.second;
}

CivilTime to_civil(Timestamp t) {
  const chr::sys_seconds tp{chr::seconds{t}};
  const auto days = chr::floor<chr::days>(tp);
  const chr::year_month_day ymd{days};
  const auto rem = (tp - days).count();
  return CivilTime{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                   static_cast<int>(static_cast<unsigned>(ymd.day())), static_cast<int>(rem / 3600),
                   static_cast<int>((rem % 3600) / 60), static_cast<int>(rem % 60)};
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);

  CivilTime c;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(s, 0, 4, c.year) || !read_int(s, 5, 2, c.month) || !read_int(s, 8, 2, c.day))
    return std::nullopt;
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':') return std::nullopt;
    if (!read_int(s, 11, 2, c.hour) || !read_int(s, 14, 2, c.minute)) return std::nullopt;
    if (s.size() > 16) {
      if (s.size() != 19 || s[16] != ':' || !read_int(s, 17, 2, c.second)) return std::nullopt;
    }
  }
  const chr::year_month_day ymd{chr::year{c.year}, chr::month{static_cast<unsigned>(c.month)},
                                chr::day{static_cast<unsigned>(c.day)}};
  if (!ymd.ok() || c.hour > 23 || c.minute > 59 || c.second > 59 || c.hour < 0 || c.minute < 0 ||
      c.second < 0)
    return std::nullopt;
  return to_timestamp(c);
}

std::string format_iso8601(Timestamp t) {
  const CivilTime c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d", c.year, c.month, c.day, c.hour,
                c.minute);
  return buf;
}

int month_of(Timestamp t) { return to_civil(t).month; }

int hour_of(Timestamp t) {
  Timestamp r = t % kSecondsPerDay;
  if (r < 0) r += kSecondsPerDay;
  return static_cast<int>(r / kSecondsPerHour);
}

Timestamp day_start(Timestamp t) {
  Timestamp r = t % kSecondsPerDay;
  if (r < 0) r += kSecondsPerDay;
  return t - r;
}

int day_of_year(Timestamp t) {
  const CivilTime c = to_civil(t);
  const Timestamp jan1 = to_timestamp(CivilTime{c.year, 1, 1});
  return static_cast<int>((day_start(t) - jan1) / kSecondsPerDay) + 1;
}

bool is_leap_year(int year) {
  return chr::year{year}.is_leap();
}

}  // namespace climgen
