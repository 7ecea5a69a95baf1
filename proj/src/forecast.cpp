#include "wpf/forecast.hpp"

#include "wpf/calendar.hpp"
#include "wpf/parallel.hpp"
#include "wpf/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace wpf::forecast {

using features::Equation;
using features::Series;

namespace {

constexpr double kExplosion = 1e9;

// Tracks plus interaction-basis rows over an absolute time window.
struct Window {
    features::Tracks tracks;
    std::vector<double> cum, plain;
    std::size_t width = 0;

    [[nodiscard]] std::span<const double> cum_row(std::int64_t t) const {
        return {cum.data() + static_cast<std::size_t>(t - tracks.base) * width, width};
    }
    [[nodiscard]] std::span<const double> plain_row(std::int64_t t) const {
        return {plain.data() + static_cast<std::size_t>(t - tracks.base) * width, width};
    }
};

void fill_basis(Window& w, const basis::BSplineSpec& diurnal, const basis::BSplineSpec& annual,
                std::int64_t base_epoch) {
    const auto rows = static_cast<std::size_t>(w.tracks.series[0].rows());
    w.width = static_cast<std::size_t>(diurnal.n_basis * annual.n_basis);
    w.cum.assign(rows * w.width, 0.0);
    w.plain.assign(rows * w.width, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::int64_t ts = base_epoch + static_cast<std::int64_t>(r) * calendar::kStepSeconds;
        const double tod = calendar::time_of_day(ts);
        const double toy = calendar::time_of_year(ts);
        basis::interaction_row(tod, toy, diurnal, annual, basis::BasisKind::Cumulative,
                               {w.cum.data() + r * w.width, w.width});
        basis::interaction_row(tod, toy, diurnal, annual, basis::BasisKind::Plain,
                               {w.plain.data() + r * w.width, w.width});
    }
}

int max_term_lag(const model::JointEquations& eqs) {
    int m = 0;
    for (const auto& turbine : eqs) {
        for (const auto& fit : turbine) {
            for (const auto& t : fit.terms) m = std::max(m, t.spec.lag);
        }
    }
    return m;
}

void check_value(double v, const char* what, std::int64_t t) {
    if (!std::isfinite(v) || std::abs(v) > kExplosion) {
        throw InstabilityError(std::string(what) + " exploded at row " + std::to_string(t));
    }
}

// Volatility proxies at t for every turbine, floored.
void vol_step(const model::JointEquations& eqs, const Eigen::VectorXd& s_floor, const Eigen::VectorXd& p_floor,
              Window& w, std::int64_t t) {
    const auto cr = w.cum_row(t);
    const auto pr = w.plain_row(t);
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        const int j = static_cast<int>(i);
        const double s = eqs[i][static_cast<std::size_t>(Equation::SpeedVol)].evaluate(w.tracks, t, cr, pr);
        const double v = eqs[i][static_cast<std::size_t>(Equation::PowerVol)].evaluate(w.tracks, t, cr, pr);
        w.tracks.at(Series::SpeedVol, j, t) = std::max(s, s_floor(j));
        w.tracks.at(Series::PowerVolCbrt, j, t) = std::max(v, p_floor(j));
    }
}

double mean_value(const model::JointEquations& eqs, std::size_t i, Equation e, const Window& w, std::int64_t t) {
    return eqs[i][static_cast<std::size_t>(e)].evaluate(w.tracks, t, w.cum_row(t), w.plain_row(t));
}

std::int64_t epoch_of_row(const data::TurbinePanel& panel, std::size_t row) {
    return panel.timestamps.front() + static_cast<std::int64_t>(row) * calendar::kStepSeconds;
}

// Window [origin - burn_in - L, origin + horizon] filtered up to origin.
Window filtered_window(const model::FittedJointModel& m, const data::TurbinePanel& panel, std::size_t origin,
                       int burn_in, int horizon) {
    const auto L = static_cast<std::size_t>(std::max(m.config.sets.max_lag(), max_term_lag(m.equations)));
    if (origin >= panel.rows()) throw IndexError("forecast origin " + std::to_string(origin) + " beyond panel");
    if (origin < L) {
        throw ParameterError("forecast origin " + std::to_string(origin) + " needs at least " + std::to_string(L) +
                             " rows of history");
    }
    if (panel.turbines() != m.turbines()) throw ParameterError("panel and model turbine counts differ");
    if (burn_in < 0) throw ParameterError("burn_in must be >= 0");
    const std::size_t s0 = std::max(L, origin > static_cast<std::size_t>(burn_in) ? origin - static_cast<std::size_t>(burn_in) : 0);
    const std::size_t base = s0 - L;
    const auto d = static_cast<Eigen::Index>(m.turbines());
    const auto rows = static_cast<Eigen::Index>(origin - base + 1 + static_cast<std::size_t>(horizon));
    const auto observed = static_cast<Eigen::Index>(origin - base + 1);

    Window w;
    w.tracks.base = static_cast<std::int64_t>(base);
    for (auto& s : w.tracks.series) s = Eigen::MatrixXd::Zero(rows, d);
    auto& speed = w.tracks.series[static_cast<std::size_t>(Series::Speed)];
    auto& power = w.tracks.series[static_cast<std::size_t>(Series::Power)];
    speed.topRows(observed) = panel.speed.middleRows(static_cast<Eigen::Index>(base), observed);
    power.topRows(observed) = panel.power.middleRows(static_cast<Eigen::Index>(base), observed);
    if (!speed.topRows(observed).allFinite() || !power.topRows(observed).allFinite()) {
        throw ParameterError("panel has missing values before the forecast origin; fill gaps first");
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        w.tracks.series[static_cast<std::size_t>(Series::SpeedVol)].col(j).setConstant(m.speed_vol_median(j));
        w.tracks.series[static_cast<std::size_t>(Series::PowerVolCbrt)].col(j).setConstant(m.power_vol_median(j));
    }
    fill_basis(w, m.config.diurnal, m.config.annual, epoch_of_row(panel, base));

    for (auto t = static_cast<std::int64_t>(s0); t <= static_cast<std::int64_t>(origin); ++t) {
        vol_step(m.equations, m.speed_vol_floor, m.power_vol_floor, w, t);
        for (std::size_t i = 0; i < m.turbines(); ++i) {
            const int j = static_cast<int>(i);
            w.tracks.at(Series::SpeedResidual, j, t) =
                w.tracks.at(Series::Speed, j, t) - mean_value(m.equations, i, Equation::SpeedMean, w, t);
        }
        for (std::size_t i = 0; i < m.turbines(); ++i) {
            const int j = static_cast<int>(i);
            w.tracks.at(Series::PowerResidual, j, t) =
                w.tracks.at(Series::Power, j, t) - mean_value(m.equations, i, Equation::PowerMean, w, t);
        }
    }
    return w;
}

// Advances one step. With shocks (z, u rows) the innovations are scaled by
// the volatility recursions; without them future shocks are zero.
void advance(const model::FittedJointModel& m, Window& w, std::int64_t t, const double* z, const double* u) {
    const std::size_t d = m.turbines();
    if (z) vol_step(m.equations, m.speed_vol_floor, m.power_vol_floor, w, t);
    for (std::size_t i = 0; i < d; ++i) {
        const int j = static_cast<int>(i);
        const double eps = z ? w.tracks.at(Series::SpeedVol, j, t) * z[i] : 0.0;
        const double v = mean_value(m.equations, i, Equation::SpeedMean, w, t) + eps;
        check_value(v, "speed forecast", t);
        w.tracks.at(Series::Speed, j, t) = v;
        w.tracks.at(Series::SpeedResidual, j, t) = eps;
    }
    for (std::size_t i = 0; i < d; ++i) {
        const int j = static_cast<int>(i);
        double eps = 0.0;
        if (u) {
            const double c = w.tracks.at(Series::PowerVolCbrt, j, t);
            eps = c * c * c * u[i];
        }
        const double v = mean_value(m.equations, i, Equation::PowerMean, w, t) + eps;
        check_value(v, "power forecast", t);
        w.tracks.at(Series::Power, j, t) = v;
        w.tracks.at(Series::PowerResidual, j, t) = eps;
    }
}

ForecastResult make_result(const model::FittedJointModel& m, const data::TurbinePanel& panel, std::size_t origin,
                           const ForecastOptions& opt) {
    if (opt.horizon < 1) throw ParameterError("forecast horizon must be >= 1");
    if (origin >= panel.rows()) throw IndexError("forecast origin " + std::to_string(origin) + " beyond panel");
    ForecastResult r;
    r.origin = origin;
    r.origin_ts = panel.timestamps.at(origin);
    r.horizon = opt.horizon;
    r.turbines = static_cast<int>(m.turbines());
    r.seed = opt.seed;
    return r;
}

}  // namespace

FilterState filter(const model::FittedJointModel& model, const data::TurbinePanel& panel, std::size_t origin,
                   int burn_in) {
    Window w = filtered_window(model, panel, origin, burn_in, 0);
    FilterState st;
    st.tracks = std::move(w.tracks);
    st.origin = origin;
    st.origin_ts = panel.timestamps.at(origin);
    return st;
}

ForecastResult point_forecast(const model::FittedJointModel& model, const data::TurbinePanel& panel,
                              std::size_t origin, const ForecastOptions& options) {
    ForecastResult r = make_result(model, panel, origin, options);
    Window w = filtered_window(model, panel, origin, options.burn_in, options.horizon);
    const auto d = static_cast<Eigen::Index>(model.turbines());
    r.point_speed.resize(options.horizon, d);
    r.point_power.resize(options.horizon, d);
    for (int h = 1; h <= options.horizon; ++h) {
        const auto t = static_cast<std::int64_t>(origin) + h;
        advance(model, w, t, nullptr, nullptr);
        for (Eigen::Index j = 0; j < d; ++j) {
            r.point_speed(h - 1, j) = w.tracks.at(Series::Speed, static_cast<int>(j), t);
            r.point_power(h - 1, j) = w.tracks.at(Series::Power, static_cast<int>(j), t);
        }
    }
    return r;
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    // splitmix64 over the (seed, path) pair
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (path + 1));
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<double> percentiles(std::vector<double> sample) {
    if (sample.empty()) throw ParameterError("percentiles of an empty sample");
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    std::vector<double> q(kPercentiles);
    for (std::size_t k = 1; k <= static_cast<std::size_t>(kPercentiles); ++k) {
        const std::size_t rank = std::max<std::size_t>(1, (k * n + 99) / 100);
        q[k - 1] = sample[rank - 1];
    }
    return q;
}

ForecastResult bootstrap_forecast(const model::FittedJointModel& model, const data::TurbinePanel& panel,
                                  std::size_t origin, const ForecastOptions& options) {
    ForecastResult r = point_forecast(model, panel, origin, options);
    if (options.n_paths < 1) throw ParameterError("bootstrap needs n_paths >= 1");
    if (options.n_paths < 100) r.warnings.push_back("fewer than 100 bootstrap paths; percentiles are coarse");
    const Eigen::Index pool = model.z_pool.rows();
    if (pool == 0 || model.u_pool.rows() != pool) throw ParameterError("model has an empty residual pool");

    const Window base = filtered_window(model, panel, origin, options.burn_in, options.horizon);
    const std::size_t d = model.turbines();
    const auto H = static_cast<std::size_t>(options.horizon);
    const auto P = static_cast<std::size_t>(options.n_paths);
    std::vector<double> speed(P * H * d), power(P * H * d);
    // Row-major pools so a drawn row is contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> zp = model.z_pool;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> up = model.u_pool;

    parallel_for(P, options.workers, [&](std::size_t p) {
        std::mt19937_64 gen(path_seed(options.seed, p));
        std::uniform_int_distribution<Eigen::Index> pick(0, pool - 1);
        Window w = base;
        for (std::size_t h = 1; h <= H; ++h) {
            const auto t = static_cast<std::int64_t>(origin + h);
            const Eigen::Index row = pick(gen);
            advance(model, w, t, zp.row(row).data(), up.row(row).data());
            for (std::size_t i = 0; i < d; ++i) {
                speed[(p * H + h - 1) * d + i] = w.tracks.at(Series::Speed, static_cast<int>(i), t);
                power[(p * H + h - 1) * d + i] = w.tracks.at(Series::Power, static_cast<int>(i), t);
            }
        }
    });

    r.n_paths = options.n_paths;
    r.mean_speed = Eigen::MatrixXd::Zero(options.horizon, static_cast<Eigen::Index>(d));
    r.mean_power = Eigen::MatrixXd::Zero(options.horizon, static_cast<Eigen::Index>(d));
    r.q_speed.assign(H * d * kPercentiles, 0.0);
    r.q_power.assign(H * d * kPercentiles, 0.0);
    std::vector<double> s(P), v(P);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t i = 0; i < d; ++i) {
            double ms = 0.0, mp = 0.0;
            for (std::size_t p = 0; p < P; ++p) {
                s[p] = speed[(p * H + h) * d + i];
                v[p] = power[(p * H + h) * d + i];
                ms += s[p];
                mp += v[p];
            }
            r.mean_speed(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(i)) = ms / static_cast<double>(P);
            r.mean_power(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(i)) = mp / static_cast<double>(P);
            const auto qs = percentiles(s);
            const auto qv = percentiles(v);
            const std::size_t off = r.index(static_cast<int>(h + 1), static_cast<int>(i), 1);
            std::copy(qs.begin(), qs.end(), r.q_speed.begin() + static_cast<std::ptrdiff_t>(off));
            std::copy(qv.begin(), qv.end(), r.q_power.begin() + static_cast<std::ptrdiff_t>(off));
        }
    }
    return r;
}

model::Term term(Equation e, features::Family f, int source, int lag, double coef, double threshold,
                 features::Sign sign, int basis) {
    model::Term t;
    t.spec = {e, f, source, lag, threshold, sign, basis};
    t.coef = coef;
    return t;
}

model::Term intercept(Equation e, double coef, int basis) {
    model::Term t;
    t.spec.equation = e;
    t.spec.family = features::Family::Intercept;
    t.spec.basis = basis;
    t.coef = coef;
    return t;
}

namespace {

void validate_truth(const model::JointEquations& truth) {
    const int d = static_cast<int>(truth.size());
    if (d < 1) throw ParameterError("ground truth has no turbines");
    for (const auto& turbine : truth) {
        for (std::size_t e = 0; e < 4; ++e) {
            for (const auto& t : turbine[e].terms) {
                if (static_cast<std::size_t>(t.spec.equation) != e) {
                    throw ParameterError("term " + features::describe(t.spec) + " filed under the wrong equation");
                }
                if (t.spec.family == features::Family::Intercept) continue;
                if (features::equation_of(t.spec.family) != t.spec.equation) {
                    throw ParameterError("family does not belong to the equation: " + features::describe(t.spec));
                }
                if (t.spec.source < 0 || t.spec.source >= d) {
                    throw ParameterError("term source turbine out of range: " + features::describe(t.spec));
                }
                if (t.spec.lag < 0 || (t.spec.lag == 0 && !features::allows_lag_zero(t.spec.family))) {
                    throw ParameterError("invalid lag in " + features::describe(t.spec));
                }
            }
        }
    }
}

}  // namespace

SyntheticSeries simulate_series(const model::JointEquations& truth, const basis::BSplineSpec& diurnal,
                                const basis::BSplineSpec& annual, std::size_t n, std::uint64_t seed,
                                std::int64_t start_epoch, int burn_in) {
    validate_truth(truth);
    diurnal.validate(true);
    annual.validate();
    if (n == 0) throw ParameterError("simulation length must be positive");
    if (burn_in < 0) throw ParameterError("burn_in must be >= 0");
    const std::size_t d = truth.size();
    const auto L = static_cast<std::size_t>(std::max(1, max_term_lag(truth)));
    const std::size_t total = L + static_cast<std::size_t>(burn_in) + n;
    const auto di = static_cast<Eigen::Index>(d);

    Window w;
    w.tracks.base = 0;
    for (auto& s : w.tracks.series) s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), di);
    w.tracks.series[static_cast<std::size_t>(Series::SpeedVol)].setOnes();
    w.tracks.series[static_cast<std::size_t>(Series::PowerVolCbrt)].setOnes();
    const std::int64_t first_epoch =
        start_epoch - static_cast<std::int64_t>(L + static_cast<std::size_t>(burn_in)) * calendar::kStepSeconds;
    fill_basis(w, diurnal, annual, first_epoch);

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(d), u(d);
    for (auto t = static_cast<std::int64_t>(L); t < static_cast<std::int64_t>(total); ++t) {
        for (std::size_t i = 0; i < d; ++i) z[i] = normal(gen);
        for (std::size_t i = 0; i < d; ++i) u[i] = normal(gen);
        const auto cr = w.cum_row(t);
        const auto pr = w.plain_row(t);
        for (std::size_t i = 0; i < d; ++i) {
            const int j = static_cast<int>(i);
            const double s = truth[i][static_cast<std::size_t>(Equation::SpeedVol)].evaluate(w.tracks, t, cr, pr);
            const double v = truth[i][static_cast<std::size_t>(Equation::PowerVol)].evaluate(w.tracks, t, cr, pr);
            check_value(s, "speed volatility", t);
            check_value(v, "power volatility", t);
            w.tracks.at(Series::SpeedVol, j, t) = std::max(s, 0.0);
            w.tracks.at(Series::PowerVolCbrt, j, t) = std::max(v, 0.0);
        }
        for (std::size_t i = 0; i < d; ++i) {
            const int j = static_cast<int>(i);
            const double eps = w.tracks.at(Series::SpeedVol, j, t) * z[i];
            const double v = mean_value(truth, i, Equation::SpeedMean, w, t) + eps;
            check_value(v, "speed", t);
            w.tracks.at(Series::Speed, j, t) = v;
            w.tracks.at(Series::SpeedResidual, j, t) = eps;
        }
        for (std::size_t i = 0; i < d; ++i) {
            const int j = static_cast<int>(i);
            const double c = w.tracks.at(Series::PowerVolCbrt, j, t);
            const double eps = c * c * c * u[i];
            const double v = mean_value(truth, i, Equation::PowerMean, w, t) + eps;
            check_value(v, "power", t);
            w.tracks.at(Series::Power, j, t) = v;
            w.tracks.at(Series::PowerResidual, j, t) = eps;
        }
    }

    const auto keep = static_cast<Eigen::Index>(n);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < d; ++i) labels.push_back("T" + std::to_string(i + 1));
    SyntheticSeries out;
    out.panel = data::TurbinePanel::from_matrices(w.tracks.series[static_cast<std::size_t>(Series::Speed)].bottomRows(keep),
                                                  w.tracks.series[static_cast<std::size_t>(Series::Power)].bottomRows(keep),
                                                  labels, start_epoch);
    out.speed_vol = w.tracks.series[static_cast<std::size_t>(Series::SpeedVol)].bottomRows(keep);
    out.power_vol_cbrt = w.tracks.series[static_cast<std::size_t>(Series::PowerVolCbrt)].bottomRows(keep);
    return out;
}

model::JointEquations demo_truth(int d, const basis::BSplineSpec& diurnal, const basis::BSplineSpec& annual) {
    using features::Family;
    using features::Sign;
    if (d < 1) throw ParameterError("demo_truth needs d >= 1");
    const int nd = diurnal.n_basis;
    const int cum_const = basis::constant_column(basis::BasisKind::Cumulative, diurnal, annual);
    const int plain_const = basis::constant_column(basis::BasisKind::Plain, diurnal, annual);
    // diurnal bumps within the first annual block
    const int morning = basis::interaction_index(1, std::max(1, nd / 4), nd);
    const int evening = basis::interaction_index(1, std::max(1, 3 * nd / 4), nd);
    const int noon = basis::interaction_index(1, std::max(2, nd / 2), nd);
    model::JointEquations truth(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        auto& eq = truth[static_cast<std::size_t>(i)];
        for (std::size_t e = 0; e < 4; ++e) {
            eq[e].equation = static_cast<Equation>(e);
            eq[e].turbine = i;
        }
        const int other = (i + 1) % d;
        auto& sm = eq[0].terms;
        sm = {intercept(Equation::SpeedMean, 1.2, cum_const), intercept(Equation::SpeedMean, 0.15, morning),
              intercept(Equation::SpeedMean, -0.15, evening),
              term(Equation::SpeedMean, Family::SpeedAR, i, 1, 0.75)};
        if (d > 1) sm.push_back(term(Equation::SpeedMean, Family::SpeedAR, other, 1, 0.1));
        sm.push_back(term(Equation::SpeedMean, Family::SpeedMA, i, 1, 0.2));
        eq[1].terms = {intercept(Equation::PowerMean, -150.0, cum_const),
                       term(Equation::PowerMean, Family::PowerSpeed, i, 0, 40.0),
                       term(Equation::PowerMean, Family::PowerSpeed, i, 0, 30.0, 8.0),
                       term(Equation::PowerMean, Family::PowerAR, i, 1, 0.3)};
        eq[2].terms = {intercept(Equation::SpeedVol, 0.25, plain_const), intercept(Equation::SpeedVol, 0.1, noon),
                       term(Equation::SpeedVol, Family::SpeedVolShock, i, 1, 0.1, features::kNoThreshold, Sign::Plus),
                       term(Equation::SpeedVol, Family::SpeedVolShock, i, 1, 0.2, features::kNoThreshold, Sign::Minus),
                       term(Equation::SpeedVol, Family::SpeedVolGarch, i, 1, 0.5)};
        eq[3].terms = {intercept(Equation::PowerVol, 1.2, plain_const),
                       term(Equation::PowerVol, Family::PowerVolShock, i, 1, 0.1, features::kNoThreshold, Sign::Plus),
                       term(Equation::PowerVol, Family::PowerVolShock, i, 1, 0.1, features::kNoThreshold, Sign::Minus),
                       term(Equation::PowerVol, Family::PowerVolGarch, i, 1, 0.5)};
    }
    return truth;
}

data::TurbinePanel simulate_synthetic(const model::ModelConfig& config, const model::JointEquations& truth,
                                      std::size_t n, std::uint64_t seed, std::int64_t start_epoch) {
    return simulate_series(truth, config.diurnal, config.annual, n, seed, start_epoch).panel;
}

void write_forecast_csv(std::ostream& out, const ForecastResult& r, const std::vector<std::string>& labels,
                        bool header) {
    if (header) {
        out << "origin_ts,horizon,turbine,variable,point";
        for (int q = 1; q <= kPercentiles; ++q) out << (q < 10 ? ",p0" : ",p") << q;
        out << '\n';
    }
    const std::string ts = calendar::format_timestamp(r.origin_ts);
    const bool fan = r.n_paths > 0;
    for (int h = 1; h <= r.horizon; ++h) {
        for (int i = 0; i < r.turbines; ++i) {
            for (int var = 0; var < 2; ++var) {
                const auto& pt = var == 0 ? r.point_speed : r.point_power;
                out << ts << ',' << h << ',' << labels.at(static_cast<std::size_t>(i)) << ','
                    << (var == 0 ? "speed" : "power") << ',' << text::format_double(pt(h - 1, i));
                for (int q = 1; q <= kPercentiles; ++q) {
                    out << ',';
                    if (fan) out << text::format_double(var == 0 ? r.speed_quantile(h, i, q) : r.power_quantile(h, i, q));
                }
                out << '\n';
            }
        }
    }
}

void write_forecast_csv(const std::filesystem::path& path, const ForecastResult& result,
                        const std::vector<std::string>& labels) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path.string() + "'");
    write_forecast_csv(out, result, labels, true);
}

std::vector<ForecastRecord> read_forecast_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty forecast file '" + path.string() + "'");
    const auto head = text::split_csv_line(line);
    if (head.size() != 5 + kPercentiles || head[0] != "origin_ts" || head[4] != "point") {
        throw SchemaError("unexpected forecast header in '" + path.string() + "'");
    }
    std::vector<ForecastRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split_csv_line(line);
        if (cells.size() != head.size()) {
            throw ParseError("forecast row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                             " cells");
        }
        ForecastRecord rec;
        rec.origin_ts = calendar::parse_timestamp(cells[0]);
        rec.horizon = std::stoi(cells[1]);
        rec.turbine = cells[2];
        rec.variable = cells[3];
        if (!text::parse_double(cells[4], rec.point)) {
            throw ParseError("forecast row " + std::to_string(lineno) + ": bad point value");
        }
        if (!cells[5].empty()) {
            rec.percentiles.resize(kPercentiles);
            for (int q = 0; q < kPercentiles; ++q) {
                if (!text::parse_double(cells[5 + static_cast<std::size_t>(q)], rec.percentiles[static_cast<std::size_t>(q)])) {
                    throw ParseError("forecast row " + std::to_string(lineno) + ": bad percentile");
                }
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace wpf::forecast
