#include "outbreak/date.hpp"

#include <cstdio>

#include "outbreak/csv.hpp"
#include "outbreak/error.hpp"

namespace outbreak {

using namespace std::chrono;

Date make_date(int year, unsigned month, unsigned day) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok()) {
    throw ParseError("invalid calendar date " + std::to_string(year) + "-" +
                     std::to_string(month) + "-" + std::to_string(day));
  }
  return sys_days{ymd};
}

Date parse_date(std::string_view text) {
  const std::string t = csv::trim(text);
  if (t.size() != 10 || t[4] != '-' || t[7] != '-') {
    throw ParseError("expected date as YYYY-MM-DD, got '" + t + "'");
  }
  try {
    const auto y = csv::parse_int(t.substr(0, 4));
    const auto m = csv::parse_int(t.substr(5, 2));
    const auto d = csv::parse_int(t.substr(8, 2));
    return make_date(static_cast<int>(y), static_cast<unsigned>(m),
                     static_cast<unsigned>(d));
  } catch (const ParseError&) {
    throw ParseError("expected date as YYYY-MM-DD, got '" + t + "'");
  }
}

std::string format_date(Date date) {
  const year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date date) { return static_cast<int>(year_month_day{date}.year()); }

}  // namespace outbreak
