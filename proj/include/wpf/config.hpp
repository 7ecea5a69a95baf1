#pragma once

#include "wpf/benchmarks.hpp"
#include "wpf/eval.hpp"
#include "wpf/model.hpp"
#include "wpf/panel.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace wpf::config {

struct SimulateSpec {
    std::size_t rows = 60000;
    int turbines = 2;
    std::uint64_t seed = 1;
    std::int64_t start_epoch = 1325376000;
};

struct ForecastSpec {
    std::int64_t origin = -1;  // negative: counted from the panel end (-1 = last row)
    int horizon = 288;
    int n_paths = 1000;
    std::uint64_t seed = 1;
    int burn_in = 1000;
};

/// File locations. Relative paths resolve against the working directory.
struct InputSpec {
    std::string raw;    // CSV read by ingest
    std::string panel;  // canonical panel read by analyze, fit, forecast, backtest
    std::string model;  // model file read by forecast
};

struct AnalyzeSpec {
    int span = 5;        // periodogram moving-average width (odd)
    int turbine = 0;     // design dump
    std::string equation = "speed_mean";
    std::string basis = "diurnal";  // diurnal | annual | interaction | cumulative
};

/// Everything a command needs. JSON document; every key optional, unknown
/// keys rejected with ConfigError.
struct RunConfig {
    data::PanelSchema schema;
    bool fill_gaps = true;
    model::ModelConfig model;
    bench::BenchmarkOptions benchmarks;
    eval::BacktestSpec backtest;
    SimulateSpec simulate;
    ForecastSpec forecast;
    InputSpec inputs;
    AnalyzeSpec analyze;
    std::string out_dir = "out";
    int workers = 1;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully expanded document (every default present); parse_run_config of
/// the result reproduces the configuration.
nlohmann::json to_json(const RunConfig& config);

nlohmann::json model_config_to_json(const model::ModelConfig& config);
model::ModelConfig model_config_from_json(const nlohmann::json& doc);

/// Replaces every seed in the document (simulate, forecast, backtest).
void override_seed(RunConfig& config, std::uint64_t seed);

void write_effective_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace wpf::config
