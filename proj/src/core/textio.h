#pragma once

#include <string>
#include <vector>

namespace vpc {

// shortest decimal that round-trips a double (%.17g, trimmed)
std::string format_full(double v);

// whole line after '#' removed
std::string strip_comment(const std::string& line);

std::string trim(const std::string& s);

// strict double / integer parsing; the whole token must be consumed
double parse_double(const std::string& tok, const std::string& context);
long long parse_int(const std::string& tok, const std::string& context);

std::vector<std::string> split_ws(const std::string& s);

}  // namespace vpc
