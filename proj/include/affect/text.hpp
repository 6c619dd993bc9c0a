#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace affect::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace affect::text
