#pragma once

#include "wpf/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wpf::forecast {

inline constexpr int kPercentiles = 99;

struct ForecastOptions {
    int horizon = 288;
    int n_paths = 0;  // 0: point forecast only
    std::uint64_t seed = 0;
    int workers = 1;
    int burn_in = 1000;  // filter rows before the origin
};

/// Forecasts from origin row chi for rows chi+1..chi+horizon.
struct ForecastResult {
    std::size_t origin = 0;
    std::int64_t origin_ts = 0;
    int horizon = 0;
    int turbines = 0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd point_speed;  // horizon x d, plug-in recursion
    Eigen::MatrixXd point_power;
    Eigen::MatrixXd mean_speed;   // bootstrap path means (empty without paths)
    Eigen::MatrixXd mean_power;
    std::vector<double> q_speed;  // [h][turbine][percentile - 1]
    std::vector<double> q_power;
    Warnings warnings;

    [[nodiscard]] double speed_quantile(int h, int i, int q) const { return q_speed[index(h, i, q)]; }
    [[nodiscard]] double power_quantile(int h, int i, int q) const { return q_power[index(h, i, q)]; }
    [[nodiscard]] std::size_t index(int h, int i, int q) const {
        return (static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(turbines) + static_cast<std::size_t>(i)) *
                   kPercentiles + static_cast<std::size_t>(q - 1);
    }
};

/// Recursion state up to and including the origin: observed speed/power,
/// filtered residuals and volatility proxies.
struct FilterState {
    features::Tracks tracks;  // rows [base, origin]
    std::size_t origin = 0;
    std::int64_t origin_ts = 0;
};

/// Re-runs the fitted recursions over rows (origin - burn_in, origin] using
/// only panel rows <= origin; earlier rows take residual 0 and the median
/// volatility proxy.
FilterState filter(const model::FittedJointModel& model, const data::TurbinePanel& panel, std::size_t origin,
                   int burn_in = 1000);

/// Plug-in recursion with zero future shocks.
ForecastResult point_forecast(const model::FittedJointModel& model, const data::TurbinePanel& panel,
                              std::size_t origin, const ForecastOptions& options);

/// Point forecast plus bootstrap fan: joint resampling of standardized
/// residual rows, scaled by the volatility recursions. Path p draws from a
/// generator seeded by (seed, p), so results do not depend on `workers`.
ForecastResult bootstrap_forecast(const model::FittedJointModel& model, const data::TurbinePanel& panel,
                                  std::size_t origin, const ForecastOptions& options);

/// Order statistic at ceil(q n / 100), q = 1..99, of an unsorted sample.
std::vector<double> percentiles(std::vector<double> sample);

/// Per-path generator seed.
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

/// Shorthand for a ground-truth coefficient.
model::Term term(features::Equation e, features::Family f, int source, int lag, double coef,
                 double threshold = features::kNoThreshold, features::Sign sign = features::Sign::None,
                 int basis = -1);

/// Intercept term; basis = -1 for a constant column.
model::Term intercept(features::Equation e, double coef, int basis = -1);

struct SyntheticSeries {
    data::TurbinePanel panel;
    Eigen::MatrixXd speed_vol;       // true sigma
    Eigen::MatrixXd power_vol_cbrt;  // true varsigma^{1/3}
};

/// Simulates the joint recursions with Gaussian standardized innovations
/// from flat initial conditions, dropping `burn_in` rows. Throws
/// InstabilityError when a value exceeds 1e9 in magnitude.
SyntheticSeries simulate_series(const model::JointEquations& truth, const basis::BSplineSpec& diurnal,
                                const basis::BSplineSpec& annual, std::size_t n, std::uint64_t seed,
                                std::int64_t start_epoch = 1325376000, int burn_in = 1000);

/// Heteroscedastic periodic reference model for d turbines: threshold AR
/// speed with a calendar-varying level and a cross-turbine lag, a
/// piecewise-linear power curve, and TGARCH / power-TGARCH volatilities with
/// a calendar-varying speed-volatility level.
model::JointEquations demo_truth(int d, const basis::BSplineSpec& diurnal = basis::BSplineSpec::diurnal(),
                                 const basis::BSplineSpec& annual = basis::BSplineSpec::annual());

data::TurbinePanel simulate_synthetic(const model::ModelConfig& config, const model::JointEquations& truth,
                                      std::size_t n, std::uint64_t seed, std::int64_t start_epoch = 1325376000);

/// Rows: origin_ts, horizon, turbine, variable, point, p01..p99 (empty
/// percentile cells without bootstrap paths).
void write_forecast_csv(std::ostream& out, const ForecastResult& result, const std::vector<std::string>& labels,
                        bool header = true);
void write_forecast_csv(const std::filesystem::path& path, const ForecastResult& result,
                        const std::vector<std::string>& labels);

struct ForecastRecord {
    std::int64_t origin_ts = 0;
    int horizon = 0;
    std::string turbine;
    std::string variable;
    double point = 0.0;
    std::vector<double> percentiles;  // empty when absent
};

std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& path);

}  // namespace wpf::forecast
