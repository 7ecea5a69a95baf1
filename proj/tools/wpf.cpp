// wpf: command-line front end (ingest, analyze, simulate, fit, forecast, backtest).

#include "wpf/basis.hpp"
#include "wpf/benchmarks.hpp"
#include "wpf/config.hpp"
#include "wpf/eval.hpp"
#include "wpf/features.hpp"
#include "wpf/forecast.hpp"
#include "wpf/model.hpp"
#include "wpf/model_io.hpp"
#include "wpf/panel.hpp"
#include "wpf/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace wpf;

namespace {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kFile = 3,
    kParse = 4,
    kSchema = 5,
    kConfig = 6,
    kParameter = 7,
    kIndex = 8,
    kUnrecoverable = 9,
    kDegenerate = 10,
    kInstability = 11,
};

struct Options {
    std::string config_path;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> raw, panel, model;
    std::string what;
};

void report_error(const char* kind, int code, const std::string& message) {
    std::cerr << "wpf: error kind=" << kind << " code=" << code << " message=" << nlohmann::json(message).dump()
              << '\n';
}

config::RunConfig resolve(const Options& o) {
    config::RunConfig c = o.config_path.empty() ? config::parse_run_config(nlohmann::json::object())
                                                : config::load_run_config(o.config_path);
    if (o.workers) {
        if (*o.workers < 1) throw ConfigError("--workers must be >= 1");
        c.workers = *o.workers;
        c.model.workers = *o.workers;
    }
    if (o.seed) config::override_seed(c, *o.seed);
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.raw) c.inputs.raw = *o.raw;
    if (o.panel) c.inputs.panel = *o.panel;
    if (o.model) c.inputs.model = *o.model;
    return c;
}

fs::path prepare_out(const config::RunConfig& c) {
    const fs::path dir = c.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FileError("cannot create output directory '" + dir.string() + "': " + ec.message());
    config::write_effective_config(dir / "effective-config.json", c);
    return dir;
}

void write_warnings(const fs::path& dir, const Warnings& warnings) {
    std::ofstream out(dir / "warnings.txt");
    if (!out) throw FileError("cannot write '" + (dir / "warnings.txt").string() + "'");
    for (const auto& w : warnings) out << w << '\n';
    for (const auto& w : warnings) std::cerr << "wpf: warning: " << w << '\n';
}

const std::string& need(const std::string& path, const char* key) {
    if (path.empty()) throw ConfigError(std::string("inputs.") + key + " is not set (config or --" + key + ")");
    return path;
}

data::TurbinePanel read_panel(const config::RunConfig& c, Warnings& warnings) {
    auto panel = data::load_panel(need(c.inputs.panel, "panel"), c.schema, &warnings);
    if (!panel.complete()) {
        if (!c.fill_gaps) throw SchemaError("panel has missing values and fill_gaps is off");
        warnings.push_back("panel had missing values; filled by linear interpolation");
        panel = data::fill_gaps_linear(panel);
    }
    return panel;
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<double>& first, const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path.string() + "'");
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out << text::format_double(first[static_cast<std::size_t>(r)]);
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << text::format_double(values(r, j));
        out << '\n';
    }
    if (!out) throw FileError("error writing '" + path.string() + "'");
}

int cmd_ingest(const Options& o) {
    const auto c = resolve(o);
    const fs::path dir = prepare_out(c);
    Warnings warnings;
    auto panel = data::load_panel(need(c.inputs.raw, "raw"), c.schema, &warnings);
    data::check_physical_range(panel, c.schema.range, warnings);
    if (c.fill_gaps) panel = data::fill_gaps_linear(panel);
    data::write_panel(dir / "panel.csv", panel);
    write_warnings(dir, warnings);
    std::cout << "rows=" << panel.rows() << " turbines=" << panel.turbines() << " complete=" << panel.complete()
              << " out=" << (dir / "panel.csv").string() << '\n';
    return kOk;
}

void analyze_basis(const config::RunConfig& c, const fs::path& dir) {
    const auto& kind = c.analyze.basis;
    if (kind == "diurnal" || kind == "annual") {
        const auto& spec = kind == "diurnal" ? c.model.diurnal : c.model.annual;
        const double step = kind == "diurnal" ? 1.0 : 144.0;
        std::vector<double> t;
        for (double v = 0.0; v < spec.season_length; v += step) t.push_back(v);
        const auto set = basis::periodic_basis_matrix(t, spec);
        std::vector<std::string> header{"t"};
        for (int j = 1; j <= spec.n_basis; ++j) header.push_back("B" + std::to_string(j));
        write_matrix_csv(dir / ("basis_" + kind + ".csv"), header, t, set.values);
        return;
    }
    Warnings warnings;
    const auto panel = data::load_panel(need(c.inputs.panel, "panel"), c.schema, &warnings);
    const auto set = basis::interaction_basis(panel.timestamps, c.model.diurnal, c.model.annual,
                                              kind == "cumulative" ? basis::BasisKind::Cumulative
                                                                   : basis::BasisKind::Plain);
    std::vector<std::string> header{"timestamp"};
    for (const auto& [l1, l2] : set.pairs) header.push_back("A" + std::to_string(l1) + "D" + std::to_string(l2));
    std::vector<double> ts(panel.timestamps.begin(), panel.timestamps.end());
    write_matrix_csv(dir / ("basis_" + kind + ".csv"), header, ts, set.values);
}

int cmd_analyze(const Options& o) {
    const auto c = resolve(o);
    const fs::path dir = prepare_out(c);
    if (o.what == "basis") {
        analyze_basis(c, dir);
        return kOk;
    }
    Warnings warnings;
    const auto panel = read_panel(c, warnings);
    if (o.what == "periodogram") {
        for (std::size_t i = 0; i < panel.turbines(); ++i) {
            for (const char* var : {"speed", "power"}) {
                const Eigen::VectorXd col = std::string(var) == "speed" ? panel.speed.col(static_cast<Eigen::Index>(i))
                                                                       : panel.power.col(static_cast<Eigen::Index>(i));
                const auto spectrum = data::smoothed_periodogram({col.data(), static_cast<std::size_t>(col.size())},
                                                                 c.analyze.span);
                data::write_periodogram_csv(dir / ("periodogram_" + panel.labels[i] + "_" + var + ".csv"), spectrum);
            }
        }
    } else if (o.what == "profiles") {
        const auto profiles = data::seasonal_mean_profile(panel, data::meteorological_seasons());
        data::write_profiles_csv(dir / "profiles.csv", profiles, panel.labels);
    } else if (o.what == "design") {
        const auto e = features::equation_from_string(c.analyze.equation);
        const int i = c.analyze.turbine;
        if (static_cast<std::size_t>(i) >= panel.turbines()) throw IndexError("analyze.turbine out of range");
        const auto max_lag = static_cast<std::size_t>(c.model.sets.max_lag());
        if (panel.rows() <= max_lag) throw ParameterError("panel is shorter than the maximum lag");
        const auto thresholds = features::make_thresholds(panel, c.model.thresholds);
        const auto pair = features::BasisPair::evaluate(panel.timestamps, c.model.diurnal, c.model.annual);
        const auto tracks = features::Tracks::from_panel(panel);
        // One row suffices for the column metadata.
        const auto design = features::build_design(e, i, tracks, c.model.sets, thresholds, pair, max_lag, max_lag + 1);
        const std::string name = "design_" + c.analyze.equation + "_" + panel.labels[static_cast<std::size_t>(i)] + ".csv";
        features::write_design_metadata_csv((dir / name).string(), design, i);
        std::cout << "columns=" << design.cols() << '\n';
    } else {
        throw ParameterError("unknown analysis '" + o.what + "'");
    }
    write_warnings(dir, warnings);
    return kOk;
}

int cmd_simulate(const Options& o) {
    const auto c = resolve(o);
    const fs::path dir = prepare_out(c);
    const auto truth = forecast::demo_truth(c.simulate.turbines, c.model.diurnal, c.model.annual);
    const auto series = forecast::simulate_series(truth, c.model.diurnal, c.model.annual, c.simulate.rows,
                                                  c.simulate.seed, c.simulate.start_epoch);
    data::write_panel(dir / "panel.csv", series.panel);
    std::cout << "rows=" << series.panel.rows() << " turbines=" << series.panel.turbines()
              << " out=" << (dir / "panel.csv").string() << '\n';
    return kOk;
}

void write_coefficients(const fs::path& path, const model::FittedJointModel& m) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path.string() + "'");
    out << "equation,turbine,column,coefficient\n";
    for (const auto& turbine : m.equations) {
        for (const auto& f : turbine) {
            for (const auto& t : f.terms) {
                out << features::to_string(f.equation) << ',' << m.labels[static_cast<std::size_t>(f.turbine)] << ','
                    << '"' << features::describe(t.spec) << '"' << ',' << text::format_double(t.coef) << '\n';
            }
        }
    }
}

int cmd_fit(const Options& o) {
    const auto c = resolve(o);
    const fs::path dir = prepare_out(c);
    Warnings warnings;
    const auto panel = read_panel(c, warnings);
    const auto m = model::fit_joint_model(panel, c.model);
    model::save_model(dir / "model.wpf", m);
    write_coefficients(dir / "coefficients.csv", m);
    warnings.insert(warnings.end(), m.warnings.begin(), m.warnings.end());
    write_warnings(dir, warnings);
    std::size_t nnz = 0;
    for (const auto& turbine : m.equations)
        for (const auto& f : turbine) nnz += f.terms.size();
    std::cout << "iterations=" << m.iterations << " nonzero=" << nnz << " out=" << (dir / "model.wpf").string() << '\n';
    return kOk;
}

int cmd_forecast(const Options& o) {
    const auto c = resolve(o);
    const fs::path dir = prepare_out(c);
    Warnings warnings;
    const auto m = model::load_model(need(c.inputs.model, "model"));
    const auto panel = read_panel(c, warnings);
    if (panel.labels != m.labels) throw SchemaError("panel turbines do not match the model");
    const auto n = static_cast<std::int64_t>(panel.rows());
    const std::int64_t origin = c.forecast.origin < 0 ? n + c.forecast.origin : c.forecast.origin;
    if (origin < 0 || origin >= n) throw IndexError("forecast.origin outside the panel");
    forecast::ForecastOptions opt;
    opt.horizon = c.forecast.horizon;
    opt.n_paths = c.forecast.n_paths;
    opt.seed = c.forecast.seed;
    opt.workers = c.workers;
    opt.burn_in = c.forecast.burn_in;
    const auto origin_row = static_cast<std::size_t>(origin);
    const auto result = opt.n_paths > 0 ? forecast::bootstrap_forecast(m, panel, origin_row, opt)
                                        : forecast::point_forecast(m, panel, origin_row, opt);
    forecast::write_forecast_csv(dir / "forecast.csv", result, m.labels);
    warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
    write_warnings(dir, warnings);
    std::cout << "origin=" << origin_row << " horizon=" << result.horizon << " paths=" << result.n_paths
              << " out=" << (dir / "forecast.csv").string() << '\n';
    return kOk;
}

int cmd_backtest(const Options& o) {
    const auto c = resolve(o);
    const fs::path dir = prepare_out(c);
    Warnings warnings;
    const auto panel = read_panel(c, warnings);
    const auto models = eval::resolve_models(c.backtest.models, c.model, c.benchmarks);
    const auto report = eval::run_backtest(panel, c.backtest, models, c.workers);
    eval::write_report(dir, report);
    warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
    write_warnings(dir, warnings);
    std::cout << eval::summary_table(report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wind speed and power forecasting"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("config", o.config_path, "JSON run configuration (defaults when omitted)");
        sub->add_option("--workers", o.workers, "Worker threads");
        sub->add_option("--seed", o.seed, "Replaces every seed in the configuration");
        sub->add_option("--out-dir", o.out_dir, "Output directory");
    };

    auto* ingest = app.add_subcommand("ingest", "Validate a raw CSV and write the canonical panel");
    common(ingest);
    ingest->add_option("--input", o.raw, "Raw CSV (inputs.raw)");

    auto* analyze = app.add_subcommand("analyze", "Periodogram, seasonal profiles, design metadata or basis dump");
    analyze->add_option("what", o.what, "periodogram | profiles | design | basis")
        ->required()
        ->check(CLI::IsMember({"periodogram", "profiles", "design", "basis"}));
    common(analyze);
    analyze->add_option("--panel", o.panel, "Panel CSV (inputs.panel)");
    analyze->add_flag("--dump", "Accepted for compatibility; design metadata is always written");

    auto* simulate = app.add_subcommand("simulate", "Write a synthetic panel from the reference model");
    common(simulate);

    auto* fit = app.add_subcommand("fit", "Estimate the joint model and write model.wpf");
    common(fit);
    fit->add_option("--panel", o.panel, "Panel CSV (inputs.panel)");

    auto* fc = app.add_subcommand("forecast", "Point and bootstrap forecasts from a saved model");
    common(fc);
    fc->add_option("--panel", o.panel, "Panel CSV (inputs.panel)");
    fc->add_option("--model", o.model, "Model file (inputs.model)");

    auto* bt = app.add_subcommand("backtest", "Rolling-origin evaluation against benchmarks");
    common(bt);
    bt->add_option("--panel", o.panel, "Panel CSV (inputs.panel)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        report_error("usage", kUsage, e.what());
        return kUsage;
    }

    try {
        if (*ingest) return cmd_ingest(o);
        if (*analyze) return cmd_analyze(o);
        if (*simulate) return cmd_simulate(o);
        if (*fit) return cmd_fit(o);
        if (*fc) return cmd_forecast(o);
        if (*bt) return cmd_backtest(o);
    } catch (const FileError& e) {
        report_error("file", kFile, e.what());
        return kFile;
    } catch (const ParseError& e) {
        report_error("parse", kParse, e.what());
        return kParse;
    } catch (const SchemaError& e) {
        report_error("schema", kSchema, e.what());
        return kSchema;
    } catch (const ConfigError& e) {
        report_error("config", kConfig, e.what());
        return kConfig;
    } catch (const ParameterError& e) {
        report_error("parameter", kParameter, e.what());
        return kParameter;
    } catch (const IndexError& e) {
        report_error("index", kIndex, e.what());
        return kIndex;
    } catch (const UnrecoverableSeriesError& e) {
        report_error("unrecoverable_series", kUnrecoverable, e.what());
        return kUnrecoverable;
    } catch (const DegenerateError& e) {
        report_error("degenerate", kDegenerate, e.what());
        return kDegenerate;
    } catch (const InstabilityError& e) {
        report_error("instability", kInstability, e.what());
        return kInstability;
    } catch (const std::exception& e) {
        report_error("internal", kInternal, e.what());
        return kInternal;
    }
    return kInternal;
}
