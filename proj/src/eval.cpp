#include "wpf/eval.hpp"

#include "wpf/parallel.hpp"
#include "wpf/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace wpf::eval {

const char* to_string(RefitPolicy p) { return p == RefitPolicy::Once ? "once" : "per_origin"; }

RefitPolicy parse_refit_policy(const std::string& s) {
    if (s == "once") return RefitPolicy::Once;
    if (s == "per_origin") return RefitPolicy::PerOrigin;
    throw ParameterError("unknown refit policy '" + s + "' (expected once or per_origin)");
}

std::vector<int> BacktestSpec::default_horizons() {
    std::vector<int> h(288);
    std::iota(h.begin(), h.end(), 1);
    return h;
}

int BacktestSpec::max_horizon() const { return *std::max_element(horizons.begin(), horizons.end()); }

void BacktestSpec::validate() const {
    if (n_origins < 1) throw ParameterError("backtest n_origins must be >= 1");
    if (horizons.empty()) throw ParameterError("backtest horizons must not be empty");
    for (int h : horizons) {
        if (h < 1) throw ParameterError("backtest horizons must be >= 1");
    }
    if (!std::is_sorted(horizons.begin(), horizons.end()) ||
        std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
        throw ParameterError("backtest horizons must be strictly increasing");
    }
    auto listed = [&](int k) { return std::binary_search(horizons.begin(), horizons.end(), k); };
    for (int k : density_horizons) {
        if (!listed(k)) throw ParameterError("density horizon " + std::to_string(k) + " is not a backtest horizon");
    }
    for (int k : table_horizons) {
        if (!listed(k)) throw ParameterError("table horizon " + std::to_string(k) + " is not a backtest horizon");
    }
    if (in_sample < 2) throw ParameterError("backtest in_sample must be >= 2");
    if (models.empty()) throw ParameterError("backtest needs at least one model");
    if (density_points < 2) throw ParameterError("density_points must be >= 2");
}

std::vector<std::size_t> sample_origins(std::size_t rows, const BacktestSpec& spec) {
    spec.validate();
    const auto H = static_cast<std::size_t>(spec.max_horizon());
    const std::size_t lo = spec.in_sample - 1;
    if (rows < spec.in_sample + H) throw ParameterError("panel too short for the backtest window");
    const std::size_t hi = rows - 1 - H;  // inclusive
    const std::size_t span = hi - lo + 1;
    const auto N = static_cast<std::size_t>(spec.n_origins);
    if (span < N) {
        throw ParameterError("only " + std::to_string(span) + " admissible origins for " + std::to_string(N) +
                             " requested");
    }
    // partial Fisher-Yates over the admissible range
    std::vector<std::size_t> pool(span);
    std::iota(pool.begin(), pool.end(), lo);
    std::mt19937_64 rng(spec.seed);
    for (std::size_t k = 0; k < N; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, span - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    pool.resize(N);
    std::sort(pool.begin(), pool.end());
    return pool;
}

double mae(std::span<const double> forecasts, std::span<const double> actuals) {
    if (forecasts.size() != actuals.size()) throw ParameterError("mae: forecasts and actuals differ in length");
    if (forecasts.empty()) throw ParameterError("mae: empty input");
    double s = 0.0;
    for (std::size_t k = 0; k < forecasts.size(); ++k) {
        if (!std::isfinite(forecasts[k])) throw ParameterError("mae: non-finite forecast at index " + std::to_string(k));
        s += std::abs(actuals[k] - forecasts[k]);
    }
    return s / static_cast<double>(forecasts.size());
}

double mae_mean(std::span<const double> per_turbine) {
    if (per_turbine.empty()) throw ParameterError("mae_mean: no turbines");
    return std::accumulate(per_turbine.begin(), per_turbine.end(), 0.0) / static_cast<double>(per_turbine.size());
}

Eigen::VectorXd dmae(const Eigen::VectorXd& mae_k, const Eigen::VectorXd& persistence_k) {
    if (mae_k.size() != persistence_k.size()) throw ParameterError("dmae: length mismatch");
    return mae_k - persistence_k;
}

double mae_standard_deviation(std::span<const double> abs_errors) {
    const std::size_t n = abs_errors.size();
    if (n < 2) return 0.0;
    const double m = std::accumulate(abs_errors.begin(), abs_errors.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double e : abs_errors) ss += (e - m) * (e - m);
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

std::vector<double> error_density(std::span<const double> errors, std::span<const double> grid, double bandwidth) {
    if (errors.empty()) throw ParameterError("error_density: no errors");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ParameterError("error_density: bandwidth must be > 0");
    std::vector<double> out(grid.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(errors.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double s = 0.0;
        for (double e : errors) {
            const double z = (grid[g] - e) / bandwidth;
            s += std::exp(-0.5 * z * z);
        }
        out[g] = s * norm;
    }
    return out;
}

double silverman_bandwidth(std::span<const double> errors) {
    const std::size_t n = errors.size();
    if (n < 2) return 1.0;
    std::vector<double> v(errors.begin(), errors.end());
    std::sort(v.begin(), v.end());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double e : v) ss += (e - m) * (e - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    auto q = [&](double p) {
        const double h = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, n - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    const double iqr = q(0.75) - q(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) return 1.0;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

// ---- lasso forecaster -------------------------------------------------------------

LassoForecaster::LassoForecaster(model::ModelConfig config, int burn_in)
    : config_(std::move(config)), burn_in_(burn_in) {}

void LassoForecaster::fit(const data::TurbinePanel& panel, std::size_t begin, std::size_t end,
                          const std::vector<int>&) {
    model_ = std::make_unique<model::FittedJointModel>(model::fit_joint_model(panel.slice(begin, end), config_));
}

Eigen::MatrixXd LassoForecaster::forecast(const data::TurbinePanel& panel, std::size_t origin,
                                          const std::vector<int>& horizons) const {
    const model::FittedJointModel& m = fitted();
    forecast::ForecastOptions opt;
    opt.horizon = *std::max_element(horizons.begin(), horizons.end());
    opt.burn_in = burn_in_;
    const auto r = forecast::point_forecast(m, panel, origin, opt);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), r.point_power.cols());
    for (std::size_t h = 0; h < horizons.size(); ++h) out.row(static_cast<Eigen::Index>(h)) = r.point_power.row(horizons[h] - 1);
    return out;
}

const model::FittedJointModel& LassoForecaster::fitted() const {
    if (!model_) throw ParameterError("lasso forecaster used before fit");
    return *model_;
}

std::vector<NamedModel> resolve_models(const std::vector<std::string>& ids, const model::ModelConfig& config,
                                       const bench::BenchmarkOptions& options) {
    std::vector<NamedModel> out;
    for (const auto& id : ids) {
        if (std::any_of(out.begin(), out.end(), [&](const NamedModel& m) { return m.id == id; })) {
            throw ParameterError("model '" + id + "' listed twice");
        }
        if (id == "lasso") {
            out.push_back({id, [config] { return std::make_unique<LassoForecaster>(config); }});
        } else {
            bench::make_benchmark(id, options);  // validates the id
            out.push_back({id, [id, options] { return bench::make_benchmark(id, options); }});
        }
    }
    return out;
}

// ---- backtest ----------------------------------------------------------------------

const ModelReport& BacktestReport::find(const std::string& id) const {
    for (const auto& m : models) {
        if (m.model == id) return m;
    }
    throw ParameterError("no report for model '" + id + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Absolute errors [origin][horizon][turbine] plus failure text per origin.
struct RawErrors {
    std::vector<Eigen::MatrixXd> signed_errors;  // per origin: horizons x d
    std::vector<std::string> failure;            // empty when valid
};

ModelReport summarize(const std::string& id, const std::vector<std::size_t>& origins, const RawErrors& raw,
                      const BacktestSpec& spec, const RawErrors* persistence, std::size_t d) {
    ModelReport rep;
    rep.model = id;
    std::vector<std::size_t> valid;
    for (std::size_t l = 0; l < origins.size(); ++l) {
        if (raw.failure[l].empty()) {
            valid.push_back(l);
            rep.origins.push_back(origins[l]);
        } else {
            rep.failures.push_back("origin " + std::to_string(origins[l]) + ": " + raw.failure[l]);
        }
    }
    const auto H = static_cast<Eigen::Index>(spec.horizons.size());
    const auto D = static_cast<Eigen::Index>(d);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.mae = Eigen::MatrixXd::Constant(H, D, nan);
    rep.sd = Eigen::MatrixXd::Constant(H, D, nan);
    rep.mae_k = Eigen::VectorXd::Constant(H, nan);
    rep.sd_k = Eigen::VectorXd::Constant(H, nan);
    rep.dmae_k = Eigen::VectorXd::Constant(H, nan);
    rep.density_errors.resize(spec.density_horizons.size());
    if (valid.empty()) return rep;

    std::vector<double> abs(valid.size()), mean_abs(valid.size());
    for (Eigen::Index h = 0; h < H; ++h) {
        std::fill(mean_abs.begin(), mean_abs.end(), 0.0);
        for (Eigen::Index i = 0; i < D; ++i) {
            for (std::size_t v = 0; v < valid.size(); ++v) {
                abs[v] = std::abs(raw.signed_errors[valid[v]](h, i));
                mean_abs[v] += abs[v] / static_cast<double>(D);
            }
            rep.mae(h, i) = std::accumulate(abs.begin(), abs.end(), 0.0) / static_cast<double>(valid.size());
            rep.sd(h, i) = mae_standard_deviation(abs);
        }
        rep.mae_k(h) = mae_mean(std::vector<double>(rep.mae.row(h).begin(), rep.mae.row(h).end()));
        rep.sd_k(h) = mae_standard_deviation(mean_abs);
        if (persistence) {
            // same turbine-then-origin summation order as mae_k
            Eigen::VectorXd pk(D);
            for (Eigen::Index i = 0; i < D; ++i) {
                double s = 0.0;
                for (std::size_t v = 0; v < valid.size(); ++v) s += std::abs(persistence->signed_errors[valid[v]](h, i));
                pk(i) = s / static_cast<double>(valid.size());
            }
            rep.dmae_k(h) = rep.mae_k(h) - mae_mean(std::vector<double>(pk.begin(), pk.end()));
        }
    }
    for (std::size_t q = 0; q < spec.density_horizons.size(); ++q) {
        const auto h = static_cast<Eigen::Index>(
            std::lower_bound(spec.horizons.begin(), spec.horizons.end(), spec.density_horizons[q]) - spec.horizons.begin());
        auto& e = rep.density_errors[q];
        for (std::size_t v : valid) {
            for (Eigen::Index i = 0; i < D; ++i) e.push_back(raw.signed_errors[v](h, i));
        }
    }
    return rep;
}

}  // namespace

BacktestReport run_backtest(const data::TurbinePanel& panel, const BacktestSpec& spec,
                            const std::vector<NamedModel>& models, int workers) {
    spec.validate();
    if (!panel.complete()) throw ParameterError("backtest requires a gap-free panel; fill gaps first");
    if (models.empty()) throw ParameterError("backtest needs at least one model");
    BacktestReport report;
    report.spec = spec;
    report.labels = panel.labels;
    report.origins = sample_origins(panel.rows(), spec);
    for (std::size_t o : report.origins) report.origin_timestamps.push_back(panel.timestamps[o]);
    const auto& origins = report.origins;
    const std::size_t N = origins.size();
    const std::size_t d = panel.turbines();
    const auto H = static_cast<Eigen::Index>(spec.horizons.size());

    auto actual = [&](std::size_t o) {
        Eigen::MatrixXd a(H, static_cast<Eigen::Index>(d));
        for (Eigen::Index h = 0; h < H; ++h) a.row(h) = panel.power.row(static_cast<Eigen::Index>(o) + spec.horizons[static_cast<std::size_t>(h)]);
        return a;
    };

    auto evaluate = [&](const NamedModel& nm, double& fit_s, double& fc_s) {
        RawErrors raw;
        raw.signed_errors.assign(N, Eigen::MatrixXd());
        raw.failure.assign(N, std::string());
        if (spec.refit == RefitPolicy::Once) {
            auto f = nm.make();
            const auto t0 = Clock::now();
            try {
                f->fit(panel, 0, spec.in_sample, spec.horizons);
            } catch (const std::exception& e) {
                for (auto& s : raw.failure) s = std::string("fit failed: ") + e.what();
                fit_s = seconds_since(t0);
                return raw;
            }
            fit_s = seconds_since(t0);
            const auto t1 = Clock::now();
            parallel_for(N, workers, [&](std::size_t l) {
                try {
                    const Eigen::MatrixXd fc = f->forecast(panel, origins[l], spec.horizons);
                    if (!fc.allFinite()) throw Error("non-finite forecast");
                    raw.signed_errors[l] = actual(origins[l]) - fc;
                } catch (const std::exception& e) {
                    raw.failure[l] = e.what();
                }
            });
            fc_s = seconds_since(t1);
        } else {
            const auto t0 = Clock::now();
            parallel_for(N, workers, [&](std::size_t l) {
                try {
                    auto f = nm.make();
                    const std::size_t o = origins[l];
                    f->fit(panel, o + 1 - spec.in_sample, o + 1, spec.horizons);
                    const Eigen::MatrixXd fc = f->forecast(panel, o, spec.horizons);
                    if (!fc.allFinite()) throw Error("non-finite forecast");
                    raw.signed_errors[l] = actual(o) - fc;
                } catch (const std::exception& e) {
                    raw.failure[l] = e.what();
                }
            });
            fit_s = seconds_since(t0);
            fc_s = 0.0;
        }
        return raw;
    };

    double pf = 0.0, pc = 0.0;
    const NamedModel persistence{"persistence", [] { return bench::make_benchmark("persistence"); }};
    const RawErrors pers = evaluate(persistence, pf, pc);
    for (const auto& nm : models) {
        double fit_s = 0.0, fc_s = 0.0;
        const RawErrors raw = nm.id == "persistence" ? pers : evaluate(nm, fit_s, fc_s);
        if (nm.id == "persistence") {
            fit_s = pf;
            fc_s = pc;
        }
        ModelReport rep = summarize(nm.id, origins, raw, spec, &pers, d);
        rep.fit_seconds = fit_s;
        rep.forecast_seconds = fc_s;
        if (!rep.failures.empty()) {
            report.warnings.push_back(nm.id + ": " + std::to_string(rep.failures.size()) + " of " + std::to_string(N) +
                                      " origins failed and were excluded (first: " + rep.failures.front() + ")");
        }
        report.models.push_back(std::move(rep));
    }
    return report;
}

// ---- output ------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw FileError("cannot write " + p.string());
    return out;
}

std::string fmt(double v) { return std::isfinite(v) ? text::format_double(v) : std::string(); }

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

}  // namespace

std::string summary_table(const BacktestReport& report) {
    const auto& spec = report.spec;
    std::ostringstream out;
    out << "| k |";
    for (const auto& m : report.models) out << ' ' << m.model << " |";
    out << "\n|---|";
    for (std::size_t c = 0; c < report.models.size(); ++c) out << "---|";
    out << '\n';
    for (int k : spec.table_horizons) {
        const auto h = static_cast<Eigen::Index>(
            std::lower_bound(spec.horizons.begin(), spec.horizons.end(), k) - spec.horizons.begin());
        Eigen::Index best = -1;
        for (std::size_t c = 0; c < report.models.size(); ++c) {
            const double v = report.models[c].mae_k(h);
            if (std::isfinite(v) && (best < 0 || v < report.models[static_cast<std::size_t>(best)].mae_k(h))) {
                best = static_cast<Eigen::Index>(c);
            }
        }
        out << "| " << k << " |";
        for (const auto& m : report.models) {
            const double v = m.mae_k(h);
            if (!std::isfinite(v)) {
                out << " n/a |";
                continue;
            }
            const auto& b = report.models[static_cast<std::size_t>(best)];
            const bool close = std::abs(v - b.mae_k(h)) <= 2.0 * std::max(m.sd_k(h), b.sd_k(h));
            out << ' ' << fixed(v, 2) << " (" << fixed(m.sd_k(h), 2) << ')' << (close ? "*" : "") << " |";
        }
        out << '\n';
    }
    return out.str();
}

void write_report(const std::filesystem::path& dir, const BacktestReport& report) {
    std::filesystem::create_directories(dir);
    const auto& spec = report.spec;
    {
        auto out = open_out(dir / "mae.csv");
        out << "model,turbine,k,mae,sd\n";
        for (const auto& m : report.models) {
            for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
                const auto r = static_cast<Eigen::Index>(h);
                for (std::size_t i = 0; i < report.labels.size(); ++i) {
                    const auto c = static_cast<Eigen::Index>(i);
                    out << m.model << ',' << report.labels[i] << ',' << spec.horizons[h] << ',' << fmt(m.mae(r, c)) << ','
                        << fmt(m.sd(r, c)) << '\n';
                }
                out << m.model << ",mean," << spec.horizons[h] << ',' << fmt(m.mae_k(r)) << ',' << fmt(m.sd_k(r)) << '\n';
            }
        }
    }
    {
        auto out = open_out(dir / "dmae.csv");
        out << "model,k,dmae\n";
        for (const auto& m : report.models) {
            for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
                out << m.model << ',' << spec.horizons[h] << ',' << fmt(m.dmae_k(static_cast<Eigen::Index>(h))) << '\n';
            }
        }
    }
    for (std::size_t q = 0; q < spec.density_horizons.size(); ++q) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, bw_max = 0.0;
        std::vector<double> bws;
        for (const auto& m : report.models) {
            const auto& e = m.density_errors[q];
            const double bw = e.empty() ? 1.0 : silverman_bandwidth(e);
            bws.push_back(bw);
            bw_max = std::max(bw_max, bw);
            for (double v : e) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!std::isfinite(lo)) lo = hi = 0.0;
        lo -= 4.0 * bw_max;
        hi += 4.0 * bw_max;
        std::vector<double> grid(static_cast<std::size_t>(spec.density_points));
        for (std::size_t g = 0; g < grid.size(); ++g) grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid.size() - 1);
        std::vector<std::vector<double>> cols;
        for (std::size_t c = 0; c < report.models.size(); ++c) {
            const auto& e = report.models[c].density_errors[q];
            cols.push_back(e.empty() ? std::vector<double>(grid.size(), std::numeric_limits<double>::quiet_NaN())
                                     : error_density(e, grid, bws[c]));
        }
        auto out = open_out(dir / ("density_" + std::to_string(spec.density_horizons[q]) + ".csv"));
        out << "error";
        for (const auto& m : report.models) out << ',' << m.model;
        out << '\n';
        for (std::size_t g = 0; g < grid.size(); ++g) {
            out << text::format_double(grid[g]);
            for (const auto& c : cols) out << ',' << fmt(c[g]);
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "summary.md");
        out << summary_table(report);
    }
    {
        auto out = open_out(dir / "timing.txt");
        out << "model,fit_seconds,forecast_seconds,origins,failures\n";
        for (const auto& m : report.models) {
            out << m.model << ',' << fixed(m.fit_seconds, 3) << ',' << fixed(m.forecast_seconds, 3) << ','
                << m.origins.size() << ',' << m.failures.size() << '\n';
        }
    }
    {
        auto out = open_out(dir / "origins.csv");
        out << "origin,timestamp\n";
        for (std::size_t l = 0; l < report.origins.size(); ++l) {
            out << report.origins[l] << ',' << report.origin_timestamps[l] << '\n';
        }
    }
}

}  // namespace wpf::eval
