#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wpf::text {

/// Splits one CSV line on commas. Surrounding whitespace and double quotes
/// are stripped from each cell; quoted commas are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest-safe decimal form that parses back to the identical double
/// ("inf", "-inf", "nan" for non-finite values).
std::string format_double(double v);

/// Parses a double, accepting "inf"/"-inf"/"nan". Returns false on failure.
bool parse_double(std::string_view s, double& out);

std::string trim(std::string_view s);

}  // namespace wpf::text
