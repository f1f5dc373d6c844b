#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace outbreak {

using Date = std::chrono::sys_days;

/// Parses an ISO calendar date (YYYY-MM-DD). Throws ParseError.
Date parse_date(std::string_view text);
std::string format_date(Date date);

Date make_date(int year, unsigned month, unsigned day);
int year_of(Date date);

/// Whole days from `from` to `to` (negative when `to` is earlier).
inline long days_between(Date from, Date to) {
  return static_cast<long>((to - from).count());
}

}  // namespace outbreak
