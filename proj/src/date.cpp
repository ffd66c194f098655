#include "fireclr/date.hpp"

#include <charconv>
#include <cstdio>

#include "fireclr/error.hpp"

namespace fireclr {

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("invalid date '" + std::string(whole) + "', expected YYYY-MM-DD");
  return v;
}

}  // namespace

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw ConfigError("invalid date '" + std::string(iso) + "', expected YYYY-MM-DD");
  const int y = parse_int(iso.substr(0, 4), iso);
  const int m = parse_int(iso.substr(5, 2), iso);
  const int d = parse_int(iso.substr(8, 2), iso);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ConfigError("invalid calendar date '" + std::string(iso) + "'");
  return Date{std::chrono::sys_days{ymd}};
}

Date Date::from_ymd(int y, unsigned m, unsigned d) {
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ConfigError("invalid calendar date");
  return Date{std::chrono::sys_days{ymd}};
}

std::string Date::to_string() const {
  std::chrono::year_month_day ymd{days};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace fireclr
