#pragma once

#include "wpf/benchmarks.hpp"
#include "wpf/forecast.hpp"
#include "wpf/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wpf::eval {

enum class RefitPolicy {
    Once,       // fit on rows [0, in_sample); origins drawn after the window
    PerOrigin,  // refit on the in_sample rows ending at each origin
};

const char* to_string(RefitPolicy p);
RefitPolicy parse_refit_policy(const std::string& s);

struct BacktestSpec {
    int n_origins = 1000;
    std::vector<int> horizons = default_horizons();
    std::size_t in_sample = 52830;
    std::uint64_t seed = 0;
    std::vector<std::string> models = {"persistence", "lasso"};
    RefitPolicy refit = RefitPolicy::Once;
    std::vector<int> density_horizons = {1, 24, 144, 288};
    std::vector<int> table_horizons = {1, 6, 24, 48, 72, 144, 288};
    int density_points = 512;

    static std::vector<int> default_horizons();  // 1..288
    /// Throws ParameterError.
    void validate() const;
    [[nodiscard]] int max_horizon() const;
};

/// Origins drawn uniformly without replacement, returned ascending. Each
/// origin o has a full in-sample window before it and max_horizon rows after.
std::vector<std::size_t> sample_origins(std::size_t rows, const BacktestSpec& spec);

/// MAE over the first axis of |actual - forecast|. Throws ParameterError on
/// shape mismatch or a non-finite forecast.
double mae(std::span<const double> forecasts, std::span<const double> actuals);

/// Turbine mean of a per-turbine MAE row.
double mae_mean(std::span<const double> per_turbine);

/// Difference to the persistence MAE, elementwise.
Eigen::VectorXd dmae(const Eigen::VectorXd& mae_k, const Eigen::VectorXd& persistence_k);

/// Standard error of the mean absolute error: sample SD (n - 1) over sqrt(n).
double mae_standard_deviation(std::span<const double> abs_errors);

/// Gaussian kernel density at the grid points.
std::vector<double> error_density(std::span<const double> errors, std::span<const double> grid, double bandwidth);

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5); falls back to 1 for a point mass.
double silverman_bandwidth(std::span<const double> errors);

/// Lasso joint model as a power forecaster (plug-in point forecast).
class LassoForecaster final : public bench::Forecaster {
public:
    explicit LassoForecaster(model::ModelConfig config, int burn_in = 1000);
    std::string id() const override { return "lasso"; }
    void fit(const data::TurbinePanel& panel, std::size_t begin, std::size_t end,
             const std::vector<int>& horizons) override;
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override;
    [[nodiscard]] const model::FittedJointModel& fitted() const;

private:
    model::ModelConfig config_;
    int burn_in_;
    std::unique_ptr<model::FittedJointModel> model_;
};

using ForecasterFactory = std::function<std::unique_ptr<bench::Forecaster>()>;

struct NamedModel {
    std::string id;
    ForecasterFactory make;
};

/// "lasso" or any benchmark id. Throws ParameterError for unknown ids.
std::vector<NamedModel> resolve_models(const std::vector<std::string>& ids, const model::ModelConfig& config,
                                       const bench::BenchmarkOptions& options = {});

struct ModelReport {
    std::string model;
    std::vector<std::size_t> origins;   // origins with a valid forecast
    std::vector<std::string> failures;  // "origin <o>: <message>"
    Eigen::MatrixXd mae;                // horizon x turbine
    Eigen::MatrixXd sd;
    Eigen::VectorXd mae_k;              // turbine mean per horizon
    Eigen::VectorXd sd_k;               // standard error of the per-origin turbine mean
    Eigen::VectorXd dmae_k;
    std::vector<std::vector<double>> density_errors;  // per density horizon, pooled over turbines
    double fit_seconds = 0.0;
    double forecast_seconds = 0.0;
};

struct BacktestReport {
    BacktestSpec spec;
    std::vector<std::string> labels;
    std::vector<std::size_t> origins;
    std::vector<std::int64_t> origin_timestamps;
    std::vector<ModelReport> models;
    Warnings warnings;

    [[nodiscard]] const ModelReport& find(const std::string& id) const;
};

/// Rolling-origin evaluation. Forecasts that throw or are non-finite are
/// recorded in `failures` and excluded from the tables. DMAE is relative to
/// persistence on the same origins (computed even when not listed).
BacktestReport run_backtest(const data::TurbinePanel& panel, const BacktestSpec& spec,
                            const std::vector<NamedModel>& models, int workers = 1);

/// mae.csv, dmae.csv, density_<k>.csv, origins.csv, summary.md and
/// timing.txt (wall-clock, the only non-reproducible file).
void write_report(const std::filesystem::path& dir, const BacktestReport& report);

/// Markdown table: one row per table horizon, "MAE (SD)" per model; entries
/// within two standard errors of the row minimum are marked with '*'.
std::string summary_table(const BacktestReport& report);

}  // namespace wpf::eval
