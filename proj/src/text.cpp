#include "wpf/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace wpf::text {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string cell = trim(line.substr(start, comma == std::string_view::npos
                                                        ? std::string_view::npos
                                                        : comma - start));
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
            cell = cell.substr(1, cell.size() - 2);
        }
        cells.push_back(std::move(cell));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    return std::string(buf, ptr);
}

bool parse_double(std::string_view s, double& out) {
    std::string t = trim(s);
    if (t.empty()) return false;
    if (t == "inf" || t == "+inf" || t == "Inf") {
        out = std::numeric_limits<double>::infinity();
        return true;
    }
    if (t == "-inf" || t == "-Inf") {
        out = -std::numeric_limits<double>::infinity();
        return true;
    }
    if (t == "nan" || t == "NaN") {
        out = std::numeric_limits<double>::quiet_NaN();
        return true;
    }
    const char* first = t.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc{} && ptr == t.data() + t.size();
}

}  // namespace wpf::text
