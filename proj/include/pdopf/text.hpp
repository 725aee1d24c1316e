#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdopf {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view token);

std::string_view trim(std::string_view s);

// Splits on `sep`, trimming each field.
std::vector<std::string_view> split_fields(std::string_view line, char sep);

}  // namespace pdopf
