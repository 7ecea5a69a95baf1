#include "wpf/model.hpp"

#include "wpf/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace wpf::model {

using features::Equation;
using features::Family;

void ModelConfig::validate() const {
    sets.validate();
    diurnal.validate(true);
    annual.validate();
    if (k_max < 1) throw ParameterError("k_max must be >= 1");
    if (!(floor_fraction > 0.0 && floor_fraction < 1.0)) {
        throw ParameterError("volatility floor fraction must lie in (0, 1)");
    }
    if (lasso.grid_count < 2) throw ParameterError("lasso grid_count must be >= 2");
    if (!(lasso.grid_ratio > 0.0 && lasso.grid_ratio < 1.0)) {
        throw ParameterError("lasso grid_ratio must lie in (0, 1)");
    }
    if (!(lasso.tol > 0.0)) throw ParameterError("lasso tol must be positive");
    if (lasso.max_sweeps < 1) throw ParameterError("lasso max_sweeps must be >= 1");
    if (workers < 1) throw ParameterError("workers must be >= 1");
}

double EquationFit::evaluate(const features::Tracks& tracks, std::int64_t t,
                             std::span<const double> cumulative_row, std::span<const double> plain_row) const {
    double v = 0.0;
    for (const auto& term : terms) {
        v += term.coef * features::column_value(term.spec, tracks, t, cumulative_row, plain_row);
    }
    return v;
}

double EquationFit::coefficient(const features::ColumnSpec& spec) const {
    for (const auto& term : terms) {
        if (term.spec == spec) return term.coef;
    }
    return 0.0;
}

Eigen::VectorXd compute_residuals(const Eigen::MatrixXd& design, const Eigen::VectorXd& coefficients,
                                  const Eigen::VectorXd& response) {
    if (design.cols() != coefficients.size() || design.rows() != response.size()) {
        throw ParameterError("compute_residuals: length mismatch");
    }
    return response - design * coefficients;
}

double median(std::vector<double> v) {
    if (v.empty()) throw ParameterError("median of an empty sequence");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double hi = *mid;
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

Eigen::VectorXd volatility_proxy(const Eigen::VectorXd& fitted, double floor_fraction, double* floor_out) {
    std::vector<double> positive;
    for (Eigen::Index r = 0; r < fitted.size(); ++r) {
        if (fitted(r) > 0.0) positive.push_back(fitted(r));
    }
    if (positive.empty()) throw DegenerateError("volatility fit has no positive fitted value");
    const double floor = floor_fraction * median(std::move(positive));
    if (floor_out) *floor_out = floor;
    return fitted.cwiseMax(floor);
}

namespace {

Eigen::VectorXd normalized(Eigen::VectorXd w) {
    if (!w.allFinite() || (w.array() <= 0.0).any()) {
        throw Error("non-finite or non-positive lasso weights (volatility floor violated)");
    }
    return w / w.mean();
}

}  // namespace

Eigen::VectorXd speed_weights(const Eigen::VectorXd& sigma) {
    return normalized(sigma.array().square().inverse().matrix());
}

Eigen::VectorXd power_weights(const Eigen::VectorXd& proxy_cbrt) {
    return normalized(proxy_cbrt.array().pow(6.0).inverse().matrix());
}

namespace {

struct Outcome {
    EquationFit fit;
    Eigen::VectorXd fitted;
    Eigen::VectorXd response;
    Warnings warnings;
};

std::string where(Equation e, int i) {
    return std::string(features::to_string(e)) + " turbine " + std::to_string(i);
}

Outcome fit_equation(Equation e, int i, const features::Tracks& tracks, const ModelConfig& cfg,
                     const features::ThresholdSet& thresholds, const features::BasisPair& basis,
                     std::size_t begin, std::size_t end, const Eigen::VectorXd& weights) {
    features::DesignMatrix dm = features::build_design(e, i, tracks, cfg.sets, thresholds, basis, begin, end);
    const auto removed = dm.deduplicate();
    if (dm.cols() == 0) throw DegenerateError("rank-degenerate design: " + where(e, i) + " has no usable column");
    Outcome out;
    out.response = features::equation_response(e, i, tracks, begin, end);
    const auto mask = dm.penalize_mask(basis);
    int intercept = -1;
    for (std::size_t c = 0; c < mask.size(); ++c) {
        if (!mask[c]) {
            intercept = static_cast<int>(c);
            break;
        }
    }
    const bool vol = e == Equation::SpeedVol || e == Equation::PowerVol;
    out.fit.equation = e;
    out.fit.turbine = i;
    out.fit.columns = static_cast<std::size_t>(dm.cols());
    out.fit.dropped = removed.size();

    if (vol && (out.response.array() == 0.0).all()) {
        // Zero residuals: nothing to explain, proxies stay at 1.
        out.fit.degenerate = true;
        features::ColumnSpec c = dm.columns[static_cast<std::size_t>(std::max(intercept, 0))];
        out.fit.terms.push_back({c, 1.0});
        out.fitted = Eigen::VectorXd::Ones(out.response.size());
        out.warnings.push_back(where(e, i) + ": zero residuals, volatility fixed at 1");
        return out;
    }

    lasso::LassoProblem problem{dm.values, out.response, vol ? Eigen::VectorXd() : weights, vol, mask, intercept};
    const lasso::LassoFit lf = lasso::fit_path_bic(problem, cfg.lasso);
    out.fit.lambda = lf.lambda;
    out.fit.bic = lf.path.empty() ? 0.0 : lf.path[lf.selected].bic;
    out.fit.degenerate = lf.degenerate;
    for (const auto& w : lf.warnings) out.warnings.push_back(where(e, i) + ": " + w);
    for (Eigen::Index c = 0; c < lf.coefficients.size(); ++c) {
        if (lf.coefficients(c) != 0.0) {
            out.fit.terms.push_back({dm.columns[static_cast<std::size_t>(c)], lf.coefficients(c)});
        }
    }
    out.fitted = dm.values * lf.coefficients;
    return out;
}

void set_column(Eigen::MatrixXd& m, int i, std::size_t begin, const Eigen::VectorXd& values, double fill) {
    const auto col = static_cast<Eigen::Index>(i);
    m.col(col).head(static_cast<Eigen::Index>(begin)).setConstant(fill);
    m.col(col).segment(static_cast<Eigen::Index>(begin), values.size()) = values;
}

}  // namespace

FittedJointModel fit_joint_model(const data::TurbinePanel& panel, const ModelConfig& config) {
    config.validate();
    if (!panel.complete()) throw ParameterError("panel has missing values; fill gaps before fitting");
    const std::size_t n = panel.rows();
    const int d = static_cast<int>(panel.turbines());
    if (d < 1) throw ParameterError("panel has no turbines");
    const auto trim = static_cast<std::size_t>(config.sets.max_lag());
    if (n <= trim || n - trim < config.min_sample) {
        throw ParameterError("insufficient history: need n >= " + std::to_string(trim + config.min_sample) +
                             " rows (max lag " + std::to_string(trim) + " + minimum sample " +
                             std::to_string(config.min_sample) + "), got " + std::to_string(n));
    }
    const auto m = static_cast<Eigen::Index>(n - trim);
    const auto rows = static_cast<Eigen::Index>(n);

    FittedJointModel model;
    model.config = config;
    model.labels = panel.labels;
    model.sample_begin = trim;
    model.sample_end = n;
    model.start_epoch = panel.timestamps.front();
    model.thresholds = features::make_thresholds(panel, config.thresholds);
    model.equations.resize(static_cast<std::size_t>(d));
    const features::BasisPair basis = features::BasisPair::evaluate(panel.timestamps, config.diurnal, config.annual);

    // Step 1: all proxies 1, identity weights.
    Eigen::MatrixXd eps = Eigen::MatrixXd::Ones(rows, d);
    Eigen::MatrixXd eps_p = Eigen::MatrixXd::Ones(rows, d);
    Eigen::MatrixXd sig = Eigen::MatrixXd::Ones(rows, d);
    Eigen::MatrixXd vs = Eigen::MatrixXd::Ones(rows, d);
    std::vector<Eigen::VectorXd> w_speed(static_cast<std::size_t>(d), Eigen::VectorXd::Ones(m));
    std::vector<Eigen::VectorXd> w_power(static_cast<std::size_t>(d), Eigen::VectorXd::Ones(m));
    Eigen::VectorXd sig_floor = Eigen::VectorXd::Ones(d), vs_floor = Eigen::VectorXd::Ones(d);

    const auto ud = static_cast<std::size_t>(d);
    for (int k = 1; k <= config.k_max; ++k) {
        std::vector<Outcome> speed(ud), power(ud), speed_vol(ud), power_vol(ud);
        Eigen::MatrixXd new_eps(rows, d), new_eps_p(rows, d), new_sig(rows, d), new_vs(rows, d);

        // Step 2: mean equations with the previous iteration's MA proxies.
        {
            const auto tracks = features::Tracks::from_panel(panel, &eps, &eps_p, &sig, &vs);
            parallel_for(ud, config.workers, [&](std::size_t i) {
                speed[i] = fit_equation(Equation::SpeedMean, static_cast<int>(i), tracks, config,
                                        model.thresholds, basis, trim, n, w_speed[i]);
            });
            parallel_for(ud, config.workers, [&](std::size_t i) {
                power[i] = fit_equation(Equation::PowerMean, static_cast<int>(i), tracks, config,
                                        model.thresholds, basis, trim, n, w_power[i]);
            });
        }
        for (int i = 0; i < d; ++i) {
            const auto u = static_cast<std::size_t>(i);
            set_column(new_eps, i, trim, speed[u].response - speed[u].fitted, 0.0);
            set_column(new_eps_p, i, trim, power[u].response - power[u].fitted, 0.0);
        }

        // Step 3: volatility equations on the new residuals, GARCH columns
        // from the previous proxies.
        {
            const auto tracks = features::Tracks::from_panel(panel, &new_eps, &new_eps_p, &sig, &vs);
            parallel_for(ud, config.workers, [&](std::size_t i) {
                speed_vol[i] = fit_equation(Equation::SpeedVol, static_cast<int>(i), tracks, config,
                                            model.thresholds, basis, trim, n, {});
            });
            parallel_for(ud, config.workers, [&](std::size_t i) {
                power_vol[i] = fit_equation(Equation::PowerVol, static_cast<int>(i), tracks, config,
                                            model.thresholds, basis, trim, n, {});
            });
        }

        // Step 4: floored proxies and inverse-variance weights.
        for (int i = 0; i < d; ++i) {
            const auto u = static_cast<std::size_t>(i);
            double f_s = 1.0, f_p = 1.0;
            const Eigen::VectorXd s_hat = speed_vol[u].fit.degenerate
                                              ? Eigen::VectorXd(speed_vol[u].fitted)
                                              : volatility_proxy(speed_vol[u].fitted, config.floor_fraction, &f_s);
            const Eigen::VectorXd v_hat = power_vol[u].fit.degenerate
                                              ? Eigen::VectorXd(power_vol[u].fitted)
                                              : volatility_proxy(power_vol[u].fitted, config.floor_fraction, &f_p);
            if (speed_vol[u].fit.degenerate) f_s = config.floor_fraction;
            if (power_vol[u].fit.degenerate) f_p = config.floor_fraction;
            sig_floor(i) = f_s;
            vs_floor(i) = f_p;
            const double s_med = median({s_hat.data(), s_hat.data() + s_hat.size()});
            const double v_med = median({v_hat.data(), v_hat.data() + v_hat.size()});
            set_column(new_sig, i, trim, s_hat, s_med);
            set_column(new_vs, i, trim, v_hat, v_med);
            w_speed[u] = speed_weights(s_hat);
            w_power[u] = power_weights(v_hat);
            model.equations[u] = {speed[u].fit, power[u].fit, speed_vol[u].fit, power_vol[u].fit};
            for (auto* o : {&speed[u], &power[u], &speed_vol[u], &power_vol[u]}) {
                for (auto& msg : o->warnings) {
                    model.warnings.push_back("iteration " + std::to_string(k) + ", " + msg);
                }
            }
            if (speed[u].fit.degenerate || power[u].fit.degenerate) {
                model.warnings.push_back("iteration " + std::to_string(k) + ": turbine " + std::to_string(i) +
                                         " mean fit is intercept-only with zero residuals");
            }
        }
        eps = std::move(new_eps);
        eps_p = std::move(new_eps_p);
        sig = std::move(new_sig);
        vs = std::move(new_vs);
        model.iterations = k;
    }

    model.speed_residuals = eps;
    model.power_residuals = eps_p;
    model.speed_vol = sig;
    model.power_vol_cbrt = vs;
    model.speed_vol_floor = sig_floor;
    model.power_vol_floor = vs_floor;
    model.speed_vol_median.resize(d);
    model.power_vol_median.resize(d);
    const auto begin = static_cast<Eigen::Index>(trim);
    for (int i = 0; i < d; ++i) {
        // Pre-sample rows already hold the medians.
        model.speed_vol_median(i) = begin > 0 ? sig(0, i) : median({sig.col(i).data(), sig.col(i).data() + rows});
        model.power_vol_median(i) = begin > 0 ? vs(0, i) : median({vs.col(i).data(), vs.col(i).data() + rows});
    }
    model.z_pool = eps.bottomRows(m).cwiseQuotient(sig.bottomRows(m));
    model.u_pool = eps_p.bottomRows(m).cwiseQuotient(vs.bottomRows(m).array().cube().matrix());
    const Eigen::Index tail = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(trim));
    model.tail_speed = panel.speed.bottomRows(std::min(tail, rows));
    model.tail_power = panel.power.bottomRows(std::min(tail, rows));
    return model;
}

}  // namespace wpf::model
