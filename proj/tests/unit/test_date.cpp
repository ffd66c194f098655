#include <doctest.h>

#include "fireclr/date.hpp"
#include "fireclr/error.hpp"

using fireclr::ConfigError;
using fireclr::Date;

TEST_CASE("date parse and format round trip") {
  const Date d = Date::parse("2021-08-14");
  CHECK(d.to_string() == "2021-08-14");
  CHECK(d == Date::from_ymd(2021, 8, 14));
  CHECK(Date::parse("1970-01-01").epoch_days() == 0);
  CHECK(Date::parse("1970-01-02").epoch_days() == 1);
  CHECK(Date::from_epoch_days(18000).to_string() == Date::from_epoch_days(18000).to_string());
}

TEST_CASE("date ordering and arithmetic") {
  const Date a = Date::parse("2020-02-28");
  CHECK(a.plus_days(1).to_string() == "2020-02-29");
  CHECK(a.plus_days(2).to_string() == "2020-03-01");
  CHECK(a < a.plus_days(1));
}

TEST_CASE("malformed dates are rejected") {
  CHECK_THROWS_AS(Date::parse("2021-8-14"), ConfigError);
  CHECK_THROWS_AS(Date::parse("2021-02-30"), ConfigError);
  CHECK_THROWS_AS(Date::parse("20x1-02-10"), ConfigError);
  CHECK_THROWS_AS(Date::parse(""), ConfigError);
}
