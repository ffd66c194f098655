#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fireclr {

/// Calendar date (UTC) of a scene acquisition.
struct Date {
  std::chrono::sys_days days{};

  static Date parse(std::string_view iso);  // "YYYY-MM-DD"
  static Date from_ymd(int y, unsigned m, unsigned d);
  static Date from_epoch_days(std::int64_t n) {
    return Date{std::chrono::sys_days{std::chrono::days{n}}};
  }

  std::int64_t epoch_days() const { return days.time_since_epoch().count(); }
  std::string to_string() const;
  Date plus_days(int n) const { return Date{days + std::chrono::days{n}}; }

  auto operator<=>(const Date&) const = default;
};

}  // namespace fireclr
