#pragma once

#include "wpf/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace wpf::data {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Plausibility bounds. Values outside produce warnings, never clamping.
struct PhysicalRange {
    double speed_min = 0.0;
    double power_min = -19.0;
    double power_max = 1542.0;
};

/// Column mapping for CSV ingestion. With an empty label list the loader
/// discovers every `<label>_speed` / `<label>_power` pair in header order.
struct PanelSchema {
    std::string timestamp_column = "timestamp";
    std::vector<std::string> labels;
    PhysicalRange range;
};

/// Aligned 10-minute wind speed (m/s) and power (kW) series for d turbines.
/// Missing cells hold NaN and are flagged in the masks.
struct TurbinePanel {
    std::vector<std::int64_t> timestamps;  // epoch seconds, step 600
    Eigen::MatrixXd speed;                 // n x d
    Eigen::MatrixXd power;                 // n x d
    std::vector<std::string> labels;
    Mask speed_missing;
    Mask power_missing;

    [[nodiscard]] std::size_t rows() const { return timestamps.size(); }
    [[nodiscard]] std::size_t turbines() const { return labels.size(); }
    [[nodiscard]] bool complete() const;

    /// Rows [begin, end) as a new panel.
    [[nodiscard]] TurbinePanel slice(std::size_t begin, std::size_t end) const;

    /// Builds a complete panel from dense matrices; timestamps start at
    /// `start_epoch` with a 600 s step.
    static TurbinePanel from_matrices(Eigen::MatrixXd speed, Eigen::MatrixXd power,
                                      std::vector<std::string> labels, std::int64_t start_epoch);
};

/// Reads a panel from CSV. Rows are sorted by timestamp (warning when they
/// were out of order); duplicates and non-600 s steps are rejected; empty
/// cells become missing, never filled here.
TurbinePanel load_panel(const std::filesystem::path& path, const PanelSchema& schema,
                        Warnings* warnings = nullptr);

/// Same as load_panel, from an in-memory CSV document.
TurbinePanel parse_panel_csv(const std::string& text, const PanelSchema& schema,
                             Warnings* warnings = nullptr);

/// Canonical CSV: epoch-seconds timestamp then `<label>_speed,<label>_power`
/// per turbine, values printed with round-trip precision.
void write_panel(const std::filesystem::path& path, const TurbinePanel& panel);

/// Appends one warning per series with observed values outside `range`,
/// giving the count.
void check_physical_range(const TurbinePanel& panel, const PhysicalRange& range, Warnings& out);

/// Linear interpolation across every missing run, per column. Leading and
/// trailing runs take the nearest observed value. Observed values are kept
/// bit-exactly.
TurbinePanel fill_gaps_linear(const TurbinePanel& panel);

struct SpectrumPoint {
    double frequency;  // cycles per time step
    double density;
};

/// Mean-centered raw periodogram at the Fourier frequencies k/n,
/// k = 1..floor(n/2), smoothed by a centered moving average of odd width
/// `span` (ordinates mirrored at both ends).
std::vector<SpectrumPoint> smoothed_periodogram(std::span<const double> series, int span);

/// Inclusive month/day range; may wrap over the year end.
struct SeasonRange {
    std::string name;
    unsigned start_month, start_day;
    unsigned end_month, end_day;

    [[nodiscard]] bool contains(unsigned month, unsigned day) const;
};

using SeasonPartition = std::array<SeasonRange, 4>;

/// Meteorological seasons: winter (Dec-Feb), spring, summer, autumn.
SeasonPartition meteorological_seasons();

enum class Variable { Speed = 0, Power = 1 };

/// Daily mean curves (144 points) per season, variable, and turbine.
struct SeasonalProfiles {
    std::array<std::string, 4> seasons;
    std::size_t turbines = 0;
    std::vector<double> values;  // [season][variable][turbine][tod]

    [[nodiscard]] double at(std::size_t season, Variable var, std::size_t turbine,
                            std::size_t tod) const;
};

SeasonalProfiles seasonal_mean_profile(const TurbinePanel& panel, const SeasonPartition& seasons);

void write_periodogram_csv(const std::filesystem::path& path,
                           const std::vector<SpectrumPoint>& spectrum);
void write_profiles_csv(const std::filesystem::path& path, const SeasonalProfiles& profiles,
                        const std::vector<std::string>& labels);

}  // namespace wpf::data
