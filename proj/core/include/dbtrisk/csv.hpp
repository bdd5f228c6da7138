#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dbtrisk::csv {

/// Splits one line on commas. Double-quoted fields may contain commas and "" escapes.
/// Returns false on an unterminated quote.
bool split_line(std::string_view line, std::vector<std::string>& fields);

/// Quotes a field only when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Shortest representation that round-trips through parse_double.
std::string format_double(double v);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

/// Splits text into lines on '\n', stripping one trailing '\r' per line.
/// A final empty line (file ending in '\n') is dropped.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace dbtrisk::csv
