#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wpf::calendar {

inline constexpr std::int64_t kStepSeconds = 600;
inline constexpr double kDiurnalSteps = 144.0;
inline constexpr double kAnnualSteps = 365.24 * 24 * 6;  // 52594.56

/// Position within the day in 10-minute steps, [0, 144). Anchored at UTC midnight.
double time_of_day(std::int64_t epoch_seconds);

/// Position within the (365.24-day) year in 10-minute steps, [0, kAnnualSteps).
/// Anchored at 1970-01-01 00:00 UTC; wraps with real modular arithmetic.
double time_of_year(std::int64_t epoch_seconds);

/// Calendar positions for every row of a panel.
struct CalendarIndex {
    std::vector<double> time_of_day;
    std::vector<double> time_of_year;

    static CalendarIndex from_timestamps(std::span<const std::int64_t> epochs);
};

/// Civil date from epoch seconds (UTC).
struct CivilDate {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
};
CivilDate civil_date(std::int64_t epoch_seconds);

/// Parses ISO-8601 ("2012-02-25T07:20:00Z", "2012-02-25 07:20", optional
/// seconds/fraction/Z) or integer epoch seconds. Throws ParseError.
std::int64_t parse_timestamp(const std::string& text);

/// ISO-8601 UTC rendering, "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(std::int64_t epoch_seconds);

}  // namespace wpf::calendar
