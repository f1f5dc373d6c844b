#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace outbreak::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes. Throws ParseError on an unterminated quote.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string trim(std::string_view text);
std::string lower(std::string_view text);

}  // namespace outbreak::csv
