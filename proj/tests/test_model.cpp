#include "wpf/error.hpp"
#include "wpf/forecast.hpp"
#include "wpf/model.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wpf;
using features::Equation;
using features::Family;

namespace {

lasso::Settings tight() {
    lasso::Settings s;
    s.tol = 1e-20;
    s.max_sweeps = 100000;
    return s;
}

// Two-turbine VAR with constant coefficients, no thresholds and no
// volatility regressors: the joint fit reduces to plain lasso regressions.
model::ModelConfig var_config(int k_max) {
    model::ModelConfig c;
    c.sets = features::IndexSets{};
    c.sets.families[Family::SpeedAR] = {{1, 2}, {1}, {}, {}, {}};
    c.sets.families[Family::PowerAR] = {{1}, {}, {}, {}, {}};
    c.sets.families[Family::PowerSpeed] = {{0}, {}, {}, {}, {}};
    c.sets.mean_intercept_tv = false;
    c.sets.vol_intercept_tv = false;
    c.thresholds.kind = features::ThresholdPolicy::Kind::None;
    c.k_max = k_max;
    c.lasso = tight();
    c.min_sample = 1000;
    return c;
}

// Heteroscedastic VAR(2) speed with a daily volatility cycle; power is a
// noisy linear function of speed.
data::TurbinePanel var_panel(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 2);
    Eigen::MatrixXd p = w;
    for (Eigen::Index t = 2; t < w.rows(); ++t) {
        const double s = 1.0 + 0.6 * std::sin(2.0 * M_PI * static_cast<double>(t) / 144.0);
        w(t, 0) = 1.0 + 0.6 * w(t - 1, 0) + 0.2 * w(t - 2, 0) + 0.1 * w(t - 1, 1) + 0.5 * s * z(rng);
        w(t, 1) = 0.8 + 0.7 * w(t - 1, 1) + 0.1 * w(t - 1, 0) + 0.5 * s * z(rng);
        for (int i = 0; i < 2; ++i) p(t, i) = 0.5 * p(t - 1, i) + 0.3 * w(t, i) + 0.05 * z(rng);
    }
    return test::panel_from(w, p);
}

struct Oracle {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<features::ColumnSpec> columns;
};

// Independent construction of the VAR design for var_config().
Oracle oracle_design(const data::TurbinePanel& panel, Equation e, int i, std::size_t trim) {
    const auto n = static_cast<Eigen::Index>(panel.rows());
    const auto b = static_cast<Eigen::Index>(trim);
    const auto m = n - b;
    Oracle o;
    auto add = [&](Family f, int src, int lag, const Eigen::VectorXd& v) {
        o.x.conservativeResize(m, o.x.cols() + 1);
        o.x.col(o.x.cols() - 1) = v;
        o.columns.push_back({e, f, src, lag, features::kNoThreshold, features::Sign::None, -1});
    };
    o.columns.clear();
    o.x.resize(m, 0);
    add(Family::Intercept, -1, 0, Eigen::VectorXd::Ones(m));
    if (e == Equation::SpeedMean) {
        o.y = panel.speed.col(i).tail(m);
        add(Family::SpeedAR, i, 1, panel.speed.col(i).segment(b - 1, m));
        add(Family::SpeedAR, i, 2, panel.speed.col(i).segment(b - 2, m));
        add(Family::SpeedAR, 1 - i, 1, panel.speed.col(1 - i).segment(b - 1, m));
    } else {
        o.y = panel.power.col(i).tail(m);
        add(Family::PowerAR, i, 1, panel.power.col(i).segment(b - 1, m));
        add(Family::PowerSpeed, i, 0, panel.speed.col(i).segment(b, m));
    }
    return o;
}

lasso::LassoFit oracle_fit(const Oracle& o, const Eigen::VectorXd& weights) {
    std::vector<bool> pen(static_cast<std::size_t>(o.x.cols()), true);
    pen[0] = false;
    lasso::LassoProblem prob{o.x, o.y, weights, false, pen, 0};
    return lasso::fit_path_bic(prob, tight());
}

double mean_abs_cbrt(const Eigen::VectorXd& v) {
    return v.array().abs().pow(1.0 / 3.0).mean();
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation") {
    model::ModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.k_max = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.floor_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.lasso.grid_ratio = 1.5;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.workers = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("residuals are response minus fitted values") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 1, 0, 1, -1;
    const Eigen::VectorXd b = Eigen::Vector2d(0.5, 2.0);
    const Eigen::VectorXd y = Eigen::Vector3d(5.0, 0.5, -1.5);
    const Eigen::VectorXd r = model::compute_residuals(x, b, y);
    CHECK(r(0) == 0.5);
    CHECK(r(1) == 0.0);
    CHECK(r(2) == 0.0);
    CHECK_THROWS_AS(model::compute_residuals(x, Eigen::Vector3d::Zero(), y), ParameterError);
    CHECK_THROWS_AS(model::compute_residuals(x, b, Eigen::Vector2d::Zero()), ParameterError);
}

TEST_CASE("median") {
    CHECK(model::median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(model::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(model::median({7.0}) == 7.0);
    CHECK_THROWS_AS(model::median({}), ParameterError);
}

TEST_CASE("volatility floor") {
    double floor = 0.0;
    const Eigen::VectorXd v = model::volatility_proxy(Eigen::Vector3d(1.0, 2.0, 0.0), 0.01, &floor);
    CHECK(floor == doctest::Approx(0.015));
    CHECK(v(0) == 1.0);
    CHECK(v(1) == 2.0);
    CHECK(v(2) == doctest::Approx(0.015));

    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 0.7);
    CHECK(model::volatility_proxy(flat, 0.001) == flat);
    CHECK_THROWS_AS(model::volatility_proxy(Eigen::Vector3d(0.0, -1.0, 0.0), 0.01), DegenerateError);

    // Property: the floor only raises values below it and is strictly positive.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd f(40);
        for (auto& e : f) e = z(rng);
        f(0) = 0.5;
        double fl = 0.0;
        const Eigen::VectorXd out = model::volatility_proxy(f, 0.05, &fl);
        CHECK(fl > 0.0);
        for (Eigen::Index r = 0; r < f.size(); ++r) {
            CHECK(out(r) >= fl);
            if (f(r) >= fl) CHECK(out(r) == f(r));
        }
    }
}

TEST_CASE("inverse-variance weights have mean one") {
    const Eigen::VectorXd sigma = Eigen::Vector3d(1.0, 2.0, 0.5);
    const Eigen::VectorXd w = model::speed_weights(sigma);
    CHECK(w.mean() == doctest::Approx(1.0));
    CHECK(w(0) / w(1) == doctest::Approx(4.0));
    CHECK(w(2) / w(0) == doctest::Approx(4.0));
    const Eigen::VectorXd wp = model::power_weights(sigma);
    CHECK(wp.mean() == doctest::Approx(1.0));
    CHECK(wp(0) / wp(1) == doctest::Approx(64.0));
    CHECK_THROWS(model::speed_weights(Eigen::Vector2d(1.0, 0.0)));
}

TEST_CASE("insufficient history names the requirement") {
    auto cfg = var_config(1);
    cfg.min_sample = 500;
    std::mt19937_64 rng(1);
    const auto panel = test::panel_from(test::gaussian(400, 2, rng), test::gaussian(400, 2, rng));
    try {
        (void)model::fit_joint_model(panel, cfg);
        FAIL("expected ParameterError");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("502") != std::string::npos);
    }
}

TEST_CASE("one iteration equals plain lasso regressions") {
    const auto panel = var_panel(4000, 11);
    const auto fit = model::fit_joint_model(panel, var_config(1));
    REQUIRE(fit.iterations == 1);
    CHECK(fit.sample_begin == 2);
    for (int i = 0; i < 2; ++i) {
        for (Equation e : {Equation::SpeedMean, Equation::PowerMean}) {
            CAPTURE(i);
            const auto o = oracle_design(panel, e, i, fit.sample_begin);
            const auto ref = oracle_fit(o, Eigen::VectorXd::Ones(o.y.size()));
            const auto& ef = fit.fit(e, i);
            CHECK(ef.lambda == doctest::Approx(ref.lambda).epsilon(1e-9));
            for (std::size_t c = 0; c < o.columns.size(); ++c) {
                CHECK(ef.coefficient(o.columns[c]) ==
                      doctest::Approx(ref.coefficients(static_cast<Eigen::Index>(c))).epsilon(1e-6));
            }
            // Residuals on the effective sample are exact.
            const Eigen::VectorXd res = model::compute_residuals(o.x, ref.coefficients, o.y);
            const Eigen::MatrixXd& stored = e == Equation::SpeedMean ? fit.speed_residuals : fit.power_residuals;
            CHECK((stored.col(i).tail(res.size()) - res).cwiseAbs().maxCoeff() < 1e-6);
            CHECK((stored.col(i).head(2).array() == 0.0).all());
        }
        // Intercept-only volatility equations: the unpenalized nonnegative
        // intercept is the mean absolute (cube-root) residual.
        const auto m = static_cast<Eigen::Index>(fit.sample_end - fit.sample_begin);
        const double s0 = fit.fit(Equation::SpeedVol, i).terms.at(0).coef;
        CHECK(s0 == doctest::Approx(fit.speed_residuals.col(i).tail(m).cwiseAbs().mean()).epsilon(1e-9));
        const double p0 = fit.fit(Equation::PowerVol, i).terms.at(0).coef;
        CHECK(p0 == doctest::Approx(mean_abs_cbrt(fit.power_residuals.col(i).tail(m))).epsilon(1e-9));
    }
}

TEST_CASE("second iteration is the weighted lasso under first-iteration proxies") {
    auto cfg = var_config(1);
    // Calendar-varying volatility intercept so the proxies are not constant.
    cfg.sets.vol_intercept_tv = true;
    cfg.lasso.tol = 1e-14;
    const auto panel = var_panel(4000, 12);
    const auto first = model::fit_joint_model(panel, cfg);
    cfg.k_max = 2;
    const auto second = model::fit_joint_model(panel, cfg);
    REQUIRE(second.iterations == 2);
    const auto m = static_cast<Eigen::Index>(first.sample_end - first.sample_begin);
    for (int i = 0; i < 2; ++i) {
        const Eigen::VectorXd sig = first.speed_vol.col(i).tail(m);
        const Eigen::VectorXd vs = first.power_vol_cbrt.col(i).tail(m);
        CHECK(sig.maxCoeff() > 1.2 * sig.minCoeff());
        const auto os = oracle_design(panel, Equation::SpeedMean, i, first.sample_begin);
        const auto rs = oracle_fit(os, model::speed_weights(sig));
        const auto op = oracle_design(panel, Equation::PowerMean, i, first.sample_begin);
        const auto rp = oracle_fit(op, model::power_weights(vs));
        for (std::size_t c = 0; c < os.columns.size(); ++c) {
            CHECK(second.fit(Equation::SpeedMean, i).coefficient(os.columns[c]) ==
                  doctest::Approx(rs.coefficients(static_cast<Eigen::Index>(c))).epsilon(1e-6));
        }
        for (std::size_t c = 0; c < op.columns.size(); ++c) {
            CHECK(second.fit(Equation::PowerMean, i).coefficient(op.columns[c]) ==
                  doctest::Approx(rp.coefficients(static_cast<Eigen::Index>(c))).epsilon(1e-6));
        }
    }
}

TEST_CASE("all-constant panel gives intercept-only fits") {
    const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(1500, 2, 6.0);
    const Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1500, 2, 0.4);
    auto cfg = var_config(2);
    const auto fit = model::fit_joint_model(test::panel_from(w, p), cfg);
    for (int i = 0; i < 2; ++i) {
        const auto& s = fit.fit(Equation::SpeedMean, i);
        REQUIRE(s.terms.size() == 1);
        CHECK(s.terms[0].spec.family == Family::Intercept);
        CHECK(s.terms[0].coef == doctest::Approx(6.0));
        CHECK(s.degenerate);
        const auto& pm = fit.fit(Equation::PowerMean, i);
        REQUIRE(pm.terms.size() == 1);
        CHECK(pm.terms[0].coef == doctest::Approx(0.4));
    }
    CHECK(fit.speed_residuals.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fit.speed_vol.array() == 1.0).all());
    CHECK_FALSE(fit.warnings.empty());
}

TEST_CASE("synthetic joint fit: invariants") {
    auto cfg = var_config(2);
    cfg.sets = features::IndexSets::compact();
    cfg.thresholds = {};
    cfg.lasso = {};
    cfg.min_sample = 3000;
    const auto truth = forecast::demo_truth(2, cfg.diurnal, cfg.annual);
    const auto sim = forecast::simulate_series(truth, cfg.diurnal, cfg.annual, 6000, 5);
    const auto fit = model::fit_joint_model(sim.panel, cfg);
    const auto m = static_cast<Eigen::Index>(fit.sample_end - fit.sample_begin);
    CHECK(fit.z_pool.rows() == m);
    CHECK(fit.tail_speed.rows() == cfg.sets.max_lag());
    for (int i = 0; i < 2; ++i) {
        CAPTURE(i);
        // Volatility coefficients are nonnegative and proxies respect the floor.
        for (Equation e : {Equation::SpeedVol, Equation::PowerVol}) {
            for (const auto& t : fit.fit(e, i).terms) CHECK(t.coef >= 0.0);
        }
        CHECK(fit.speed_vol_floor(i) > 0.0);
        CHECK(fit.speed_vol.col(i).tail(m).minCoeff() >= fit.speed_vol_floor(i));
        CHECK(fit.power_vol_cbrt.col(i).tail(m).minCoeff() >= fit.power_vol_floor(i));
        // Pre-sample proxy rows hold the median.
        CHECK(fit.speed_vol(0, i) == fit.speed_vol_median(i));
        // The proxies estimate E|eps| and E|epsP|^(1/3), so the standardized
        // pools have first absolute moments near one.
        CHECK(fit.z_pool.col(i).cwiseAbs().mean() == doctest::Approx(1.0).epsilon(0.05));
        CHECK(mean_abs_cbrt(fit.u_pool.col(i)) == doctest::Approx(1.0).epsilon(0.05));
        // Residuals match the stored terms row by row.
        const auto tracks = features::Tracks::from_panel(sim.panel);
        const auto basis = features::BasisPair::evaluate(sim.panel.timestamps, cfg.diurnal, cfg.annual);
        const auto& sf = fit.fit(Equation::SpeedMean, i);
        bool has_ma = false;
        for (const auto& t : sf.terms) has_ma = has_ma || t.spec.family == Family::SpeedMA;
        if (!has_ma) {
            double worst = 0.0;
            for (auto t = static_cast<std::int64_t>(fit.sample_begin); t < static_cast<std::int64_t>(fit.sample_end);
                 t += 37) {
                const auto r = static_cast<Eigen::Index>(t);
                const double pred = sf.evaluate(tracks, t, {basis.cumulative.values.row(r).data(), 48},
                                                {basis.plain.values.row(r).data(), 48});
                worst = std::max(worst, std::abs(sim.panel.speed(r, i) - pred - fit.speed_residuals(r, i)));
            }
            CHECK(worst < 1e-9);
        }
    }
}

TEST_CASE("worker count does not change the fit") {
    auto cfg = var_config(2);
    cfg.sets.vol_intercept_tv = true;
    cfg.lasso = {};
    const auto panel = var_panel(3000, 21);
    const auto a = model::fit_joint_model(panel, cfg);
    cfg.workers = 3;
    const auto b = model::fit_joint_model(panel, cfg);
    for (int i = 0; i < 2; ++i) {
        for (int e = 0; e < 4; ++e) {
            const auto& fa = a.equations[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
            const auto& fb = b.equations[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
            REQUIRE(fa.terms.size() == fb.terms.size());
            for (std::size_t t = 0; t < fa.terms.size(); ++t) CHECK(fa.terms[t].coef == fb.terms[t].coef);
        }
    }
    CHECK(a.speed_vol == b.speed_vol);
}

TEST_CASE("panels with gaps are rejected") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd w = test::gaussian(1200, 1, rng);
    w(50, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(model::fit_joint_model(test::panel_from(w, test::gaussian(1200, 1, rng)), var_config(1)),
                    ParameterError);
}

}  // TEST_SUITE
