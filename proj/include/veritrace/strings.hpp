#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace veritrace::strings {

// ASCII-only case folding; bytes >= 0x80 pass through untouched.
std::string to_lower_ascii(std::string_view s);
bool is_space(char c);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// Trims and replaces every whitespace run with a single space.
std::string collapse_whitespace(std::string_view s);

// Backslash escaping used by the TSV writers: \\ \t \n \r.
std::string escape_tsv(std::string_view s);
std::string unescape_tsv(std::string_view s);

// Strict numeric parsing; throws InputError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
// printf %.9g
std::string format_g9(double v);

}  // namespace veritrace::strings
