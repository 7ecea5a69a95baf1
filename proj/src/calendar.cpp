#include "wpf/calendar.hpp"

#include "wpf/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace wpf::calendar {

namespace {

// Howard Hinnant's civil-calendar conversions (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2 ? 1 : 0;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2 ? 1 : 0)), m, d};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool read_int(const std::string& s, std::size_t& pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    const char* first = s.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + width, out);
    if (ec != std::errc{} || ptr != first + width) return false;
    pos += width;
    return true;
}

}  // namespace

double time_of_day(std::int64_t epoch_seconds) {
    const std::int64_t sec = epoch_seconds - floor_div(epoch_seconds, 86400) * 86400;
    return static_cast<double>(sec) / static_cast<double>(kStepSeconds);
}

double time_of_year(std::int64_t epoch_seconds) {
    const double steps = static_cast<double>(epoch_seconds) / static_cast<double>(kStepSeconds);
    double r = std::fmod(steps, kAnnualSteps);
    if (r < 0.0) r += kAnnualSteps;
    if (r >= kAnnualSteps) r = 0.0;
    return r;
}

CalendarIndex CalendarIndex::from_timestamps(std::span<const std::int64_t> epochs) {
    CalendarIndex idx;
    idx.time_of_day.reserve(epochs.size());
    idx.time_of_year.reserve(epochs.size());
    for (auto e : epochs) {
        idx.time_of_day.push_back(calendar::time_of_day(e));
        idx.time_of_year.push_back(calendar::time_of_year(e));
    }
    return idx;
}

CivilDate civil_date(std::int64_t epoch_seconds) {
    return civil_from_days(floor_div(epoch_seconds, 86400));
}

std::int64_t parse_timestamp(const std::string& raw) {
    std::string s = raw;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t lead = 0;
    while (lead < s.size() && std::isspace(static_cast<unsigned char>(s[lead]))) ++lead;
    s = s.substr(lead);
    if (s.empty()) throw ParseError("empty timestamp");

    // Integer epoch seconds.
    bool all_digits = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && c == '-'))) {
            all_digits = false;
            break;
        }
    }
    if (all_digits) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ParseError("bad epoch timestamp '" + raw + "'");
        }
        return v;
    }

    std::size_t pos = 0;
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    auto fail = [&]() -> std::int64_t { throw ParseError("bad ISO-8601 timestamp '" + raw + "'"); };
    if (!read_int(s, pos, 4, year) || pos >= s.size() || s[pos++] != '-') return fail();
    if (!read_int(s, pos, 2, month) || pos >= s.size() || s[pos++] != '-') return fail();
    if (!read_int(s, pos, 2, day)) return fail();
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') return fail();
        ++pos;
        if (!read_int(s, pos, 2, hour) || pos >= s.size() || s[pos++] != ':') return fail();
        if (!read_int(s, pos, 2, minute)) return fail();
        if (pos < s.size() && s[pos] == ':') {
            ++pos;
            if (!read_int(s, pos, 2, second)) return fail();
            if (pos < s.size() && s[pos] == '.') {
                ++pos;
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            }
        }
        if (pos < s.size() && s[pos] == 'Z') ++pos;
        if (pos != s.size()) return fail();
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        return fail();
    }
    const std::int64_t days =
        days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    const CivilDate cd = civil_date(epoch_seconds);
    const std::int64_t sec = epoch_seconds - floor_div(epoch_seconds, 86400) * 86400;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", cd.year, cd.month, cd.day,
                  static_cast<int>(sec / 3600), static_cast<int>((sec / 60) % 60),
                  static_cast<int>(sec % 60));
    return buf;
}

}  // namespace wpf::calendar
