#include "support.hpp"
#include "wpf/error.hpp"
#include "wpf/features.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace wpf;
using namespace wpf::features;

namespace {

// Type-7 quantile straight from the definition.
double type7(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct Inputs {
    data::TurbinePanel panel;
    Eigen::MatrixXd eps, epsp, sigma, vsig;  // residuals and volatility proxies
};

Inputs random_inputs(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Inputs in;
    Eigen::MatrixXd w = (test::gaussian(n, d, rng).array() * 2.0 + 7.0).abs().matrix();
    Eigen::MatrixXd p = test::gaussian(n, d, rng) * 300.0 + Eigen::MatrixXd::Constant(n, d, 600.0);
    in.panel = test::panel_from(w, p);
    in.eps = test::gaussian(n, d, rng);
    in.epsp = test::gaussian(n, d, rng) * 50.0;
    in.sigma = (test::gaussian(n, d, rng).array().abs() + 0.5).matrix();
    in.vsig = (test::gaussian(n, d, rng).array().abs() + 1.0).matrix();
    return in;
}

// Regressor of one column at absolute time t, recomputed from the raw inputs.
double oracle_value(const ColumnSpec& c, const Inputs& in, const BasisPair& bp, std::int64_t t) {
    const auto at = [&](const Eigen::MatrixXd& m) { return m(t - c.lag, c.source); };
    const auto split = [&](double v) {
        return c.sign == Sign::Plus ? std::max(v, 0.0) : std::max(-v, 0.0);
    };
    double x = 1.0;
    switch (c.family) {
        case Family::Intercept: x = 1.0; break;
        case Family::SpeedAR:
        case Family::PowerSpeed: x = std::max(at(in.panel.speed), c.threshold); break;
        case Family::PowerAR: x = std::max(at(in.panel.power), c.threshold); break;
        case Family::SpeedMA:
        case Family::PowerSpeedMA: x = at(in.eps); break;
        case Family::PowerMA: x = at(in.epsp); break;
        case Family::SpeedVolShock: x = split(at(in.eps)); break;
        case Family::SpeedVolGarch: x = at(in.sigma); break;
        case Family::PowerVolShock: x = std::cbrt(split(at(in.epsp))); break;
        case Family::PowerVolGarch: x = at(in.vsig); break;
        case Family::PowerVolSpeedShock: x = std::cbrt(split(at(in.eps))); break;
        case Family::PowerVolSpeedGarch: x = std::cbrt(at(in.sigma)); break;
    }
    if (c.basis < 0) return x;
    const auto& set = basis_kind(c.equation) == basis::BasisKind::Cumulative ? bp.cumulative : bp.plain;
    return x * set.values(t, c.basis);
}

DesignMatrix build(Equation e, int i, const Inputs& in, const IndexSets& sets, const ThresholdSet& thr,
                   const BasisPair& bp) {
    switch (e) {
        case Equation::SpeedMean: return build_speed_mean_design(in.panel, in.eps, i, sets, thr, bp);
        case Equation::PowerMean: return build_power_mean_design(in.panel, in.epsp, in.eps, i, sets, thr, bp);
        case Equation::SpeedVol: return build_speed_vol_design(in.panel, in.eps, in.sigma, i, sets, bp);
        case Equation::PowerVol:
            return build_power_vol_design(in.panel, in.epsp, in.vsig, in.eps, in.sigma, i, sets, bp);
    }
    return {};
}

// Column count from the lag rules, independent of the builder.
std::size_t count_columns(Equation e, int i, int d, const IndexSets& sets, const ThresholdSet& thr, int nb) {
    const bool mean = e == Equation::SpeedMean || e == Equation::PowerMean;
    std::size_t p = (mean ? sets.mean_intercept_tv : sets.vol_intercept_tv) ? static_cast<std::size_t>(nb) : 1;
    for (Family f : families_of(e)) {
        for (int j = 0; j < d; ++j) {
            for (int k : sets.lags(f, i, j)) {
                std::size_t c = thr.for_term(f, j, k, sets).size();
                if (is_shock_family(f)) c *= 2;
                if (sets.time_varying(f, i, j, k)) c *= static_cast<std::size_t>(nb);
                p += c;
            }
        }
    }
    return p;
}

IndexSets only(Family f, FamilyLags lags) {
    IndexSets s;
    s.families[f] = std::move(lags);
    s.mean_intercept_tv = false;
    s.vol_intercept_tv = false;
    return s;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("deciles match the type-7 definition") {
    std::vector<double> x;
    for (int v = 1; v <= 100; ++v) x.push_back(v);
    const auto q = compute_thresholds(x);
    REQUIRE(q.size() == 9);
    CHECK(q[0] == doctest::Approx(10.9));
    CHECK(q[1] == doctest::Approx(20.8));
    CHECK(q[8] == doctest::Approx(90.1));

    std::mt19937_64 rng(6);
    std::lognormal_distribution<double> ln(1.0, 0.8);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> y(37 + rep * 13);
        for (auto& v : y) v = ln(rng);
        const auto t = compute_thresholds(y);
        REQUIRE(t.size() == 9);
        for (int k = 1; k <= 9; ++k) CHECK(t[static_cast<std::size_t>(k - 1)] == doctest::Approx(type7(y, k / 10.0)).epsilon(1e-12));
        CHECK(std::is_sorted(t.begin(), t.end()));
    }
}

TEST_CASE("deciles: constant series and range containment") {
    bool constant = false;
    const auto q = compute_thresholds(std::vector<double>(50, 5.0), &constant);
    CHECK(constant);
    REQUIRE(q.size() == 1);
    CHECK(q[0] == 5.0);
    std::vector<double> x;
    for (int v = 0; v <= 16; ++v) x.push_back(v);
    for (double c : compute_thresholds(x, &constant)) {
        CHECK(c >= 0.0);
        CHECK(c <= 16.0);
    }
    CHECK_FALSE(constant);
}

TEST_CASE("threshold regressor and transforms") {
    CHECK(threshold_regressor(5.0, 3.0) == 5.0);
    CHECK(threshold_regressor(2.0, 3.0) == 3.0);
    CHECK(threshold_regressor(2.0, kNoThreshold) == 2.0);
    ColumnSpec plus{Equation::SpeedVol, Family::SpeedVolShock, 0, 1, kNoThreshold, Sign::Plus, -1};
    ColumnSpec minus = plus;
    minus.sign = Sign::Minus;
    CHECK(transform(plus, -2.0) == 0.0);
    CHECK(transform(minus, -2.0) == 2.0);
    CHECK(transform(plus, 0.0) == 0.0);
    CHECK(transform(minus, 0.0) == 0.0);
    ColumnSpec pminus{Equation::PowerVol, Family::PowerVolShock, 0, 1, kNoThreshold, Sign::Minus, -1};
    ColumnSpec pplus = pminus;
    pplus.sign = Sign::Plus;
    CHECK(transform(pminus, -8.0) == doctest::Approx(2.0));
    CHECK(transform(pplus, -8.0) == 0.0);
    ColumnSpec garch{Equation::PowerVol, Family::PowerVolSpeedGarch, 0, 1, kNoThreshold, Sign::None, -1};
    CHECK(transform(garch, 27.0) == doctest::Approx(3.0));
}

TEST_CASE("names round-trip") {
    for (auto e : {Equation::SpeedMean, Equation::PowerMean, Equation::SpeedVol, Equation::PowerVol})
        CHECK(equation_from_string(to_string(e)) == e);
    for (int f = 0; f <= static_cast<int>(Family::PowerVolSpeedGarch); ++f)
        CHECK(family_from_string(to_string(static_cast<Family>(f))) == static_cast<Family>(f));
    CHECK_THROWS_AS(equation_from_string("wind"), ParseError);
}

TEST_CASE("default long lag sets") {
    const auto s = IndexSets::full();
    CHECK_NOTHROW(s.validate());
    CHECK(s.max_lag() == 150);
    auto own_long = lag_range(1, 40);
    for (int k : lag_range(140, 150)) own_long.push_back(k);
    CHECK(s.lags(Family::SpeedAR, 0, 0) == own_long);
    CHECK(s.lags(Family::SpeedAR, 0, 1) == lag_range(1, 6));
    CHECK(s.lags(Family::SpeedMA, 1, 1) == lag_range(1, 6));
    CHECK(s.lags(Family::SpeedVolShock, 0, 0) == own_long);
    CHECK(s.lags(Family::PowerAR, 0, 0) == own_long);
    auto own_zero = lag_range(0, 40);
    for (int k : lag_range(140, 150)) own_zero.push_back(k);
    CHECK(s.lags(Family::PowerSpeed, 0, 0) == own_zero);
    CHECK(s.lags(Family::PowerSpeed, 0, 1) == lag_range(0, 6));
    CHECK(s.time_varying(Family::SpeedAR, 0, 0, 2));
    CHECK_FALSE(s.time_varying(Family::SpeedAR, 0, 0, 3));
    CHECK(s.time_varying(Family::PowerSpeed, 0, 0, 0));
    CHECK(s.thresholded(Family::SpeedAR, 1));
    CHECK_FALSE(s.thresholded(Family::SpeedAR, 3));
    for (Family f : families_of(Equation::SpeedMean)) {
        for (int j = 0; j < 2; ++j) {
            const auto& l = s.lags(f, 0, j);
            CHECK(std::find(l.begin(), l.end(), 0) == l.end());
        }
    }
    CHECK_NOTHROW(IndexSets::compact().validate());
    auto bad = only(Family::SpeedAR, {{0, 1}, {}, {}, {}, {}});
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("column counts and metadata round trip for every equation") {
    const auto in = random_inputs(420, 2, 21);
    // Paper lag rules scaled down so the panel can hold them.
    IndexSets sets = IndexSets::full();
    for (auto& [f, l] : sets.families) {
        for (auto* v : {&l.own, &l.cross, &l.own_tv, &l.cross_tv, &l.threshold}) {
            std::vector<int> keep;
            for (int k : *v)
                if (k <= 6 || k >= 148) keep.push_back(k);
            *v = keep;
        }
    }
    const auto thr = make_thresholds(in.panel, {});
    const auto bp = BasisPair::evaluate(in.panel.timestamps, basis::BSplineSpec::diurnal(), basis::BSplineSpec::annual());
    for (auto e : {Equation::SpeedMean, Equation::PowerMean, Equation::SpeedVol, Equation::PowerVol}) {
        for (int i = 0; i < 2; ++i) {
            CAPTURE(to_string(e));
            CAPTURE(i);
            const auto dm = build(e, i, in, sets, thr, bp);
            CHECK(dm.row_offset == 150);
            CHECK(dm.rows() == 270);
            CHECK(static_cast<std::size_t>(dm.cols()) == count_columns(e, i, 2, sets, thr, 48));
            CHECK(static_cast<std::size_t>(dm.cols()) == expected_columns(e, i, 2, sets, thr, bp));
            std::set<std::string> seen;
            bool exact = true;
            for (Eigen::Index c = 0; c < dm.cols(); ++c) {
                const auto& spec = dm.columns[static_cast<std::size_t>(c)];
                CHECK(spec.equation == e);
                seen.insert(describe(spec) + "/" + std::to_string(spec.basis));
                for (Eigen::Index r = 0; r < dm.rows(); r += 7) {
                    const auto t = static_cast<std::int64_t>(dm.row_offset) + r;
                    exact = exact && dm.values(r, c) == oracle_value(spec, in, bp, t);
                }
            }
            CHECK(exact);
            CHECK(seen.size() == static_cast<std::size_t>(dm.cols()));  // one column per coefficient instance
        }
    }
}

TEST_CASE("minimal designs") {
    const auto in = random_inputs(300, 1, 2);
    const auto bp = BasisPair::evaluate(in.panel.timestamps, basis::BSplineSpec::diurnal(), basis::BSplineSpec::annual());
    ThresholdPolicy none;
    none.kind = ThresholdPolicy::Kind::None;
    const auto thr_none = make_thresholds(in.panel, none);

    SUBCASE("AR(1)") {
        const auto sets = only(Family::SpeedAR, {{1}, {}, {}, {}, {}});
        const auto dm = build_speed_mean_design(in.panel, in.eps, 0, sets, thr_none, bp);
        REQUIRE(dm.cols() == 2);
        CHECK(dm.row_offset == 1);
        CHECK((dm.values.col(0).array() == 1.0).all());
        CHECK(dm.values.col(1) == in.panel.speed.col(0).segment(0, 299));
    }
    SUBCASE("one time-varying lag adds 48 columns") {
        const auto sets = only(Family::SpeedAR, {{1}, {}, {1}, {}, {}});
        CHECK(build_speed_mean_design(in.panel, in.eps, 0, sets, thr_none, bp).cols() == 49);
    }
    SUBCASE("decile thresholds at lag 1 give 10 columns") {
        const auto sets = only(Family::SpeedAR, {{1}, {}, {}, {}, {1}});
        const auto dm = build_speed_mean_design(in.panel, in.eps, 0, sets, make_thresholds(in.panel, {}), bp);
        CHECK(dm.cols() == 11);
    }
    SUBCASE("threshold power curve: intercept + max{W_t, c}, c = 0..16") {
        ThresholdPolicy fixed;
        fixed.kind = ThresholdPolicy::Kind::Fixed;
        for (int c = 0; c <= 16; ++c) fixed.speed_fixed.push_back(c);
        const auto sets = only(Family::PowerSpeed, {{0}, {}, {}, {}, {0}});
        auto dm = build_power_mean_design(in.panel, in.epsp, in.eps, 0, sets, make_thresholds(in.panel, fixed), bp);
        REQUIRE(dm.cols() == 19);
        CHECK(dm.row_offset == 0);
        for (Eigen::Index r = 0; r < dm.rows(); ++r) {
            CHECK(dm.values(r, 1) == in.panel.speed(r, 0));  // lag 0: contemporaneous speed
            CHECK(dm.values(r, 18) == std::max(in.panel.speed(r, 0), 16.0));
        }
        // Every c at or below the smallest speed duplicates the linear column.
        const double wmin = in.panel.speed.col(0).minCoeff();
        std::vector<std::size_t> expected;
        for (int c = 0; c <= 16; ++c)
            if (c <= wmin) expected.push_back(static_cast<std::size_t>(c) + 2);
        REQUIRE_FALSE(expected.empty());
        const auto removed = dm.deduplicate();
        CHECK(removed == expected);
        CHECK(dm.cols() == static_cast<Eigen::Index>(19 - expected.size()));
    }
    SUBCASE("speed mean never reads power") {
        for (const auto& c : build_speed_mean_design(in.panel, in.eps, 0, IndexSets::compact(), thr_none, bp).columns) {
            if (c.family == Family::Intercept) continue;
            CHECK(source_series(c.family) != Series::Power);
            CHECK(source_series(c.family) != Series::PowerResidual);
        }
    }
    SUBCASE("all-ones proxies give constant garch columns") {
        const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(300, 1);
        const auto sets = only(Family::SpeedVolGarch, {{1, 2}, {}, {}, {}, {}});
        auto dm = build_speed_vol_design(in.panel, in.eps, ones, 0, sets, bp);
        CHECK(dm.cols() == 3);
        CHECK((dm.values.array() == 1.0).all());
        dm.deduplicate();
        CHECK(dm.cols() == 1);
    }
    SUBCASE("power volatility design carries speed-volatility columns") {
        const auto dm = build_power_vol_design(in.panel, in.epsp, in.vsig, in.eps, in.sigma, 0, IndexSets::full(), bp);
        bool speed_garch = false, speed_shock = false;
        for (const auto& c : dm.columns) {
            speed_garch = speed_garch || c.family == Family::PowerVolSpeedGarch;
            speed_shock = speed_shock || c.family == Family::PowerVolSpeedShock;
        }
        CHECK(speed_garch);
        CHECK(speed_shock);
    }
    SUBCASE("shock pair is two columns") {
        const auto sets = only(Family::SpeedVolShock, {{3}, {}, {}, {}, {}});
        const auto dm = build_speed_vol_design(in.panel, in.eps, in.sigma, 0, sets, bp);
        REQUIRE(dm.cols() == 3);
        CHECK(dm.columns[1].sign != dm.columns[2].sign);
    }
}

TEST_CASE("insufficient history is reported with the required length") {
    const auto in = random_inputs(120, 1, 3);
    const auto bp = BasisPair::evaluate(in.panel.timestamps, basis::BSplineSpec::diurnal(), basis::BSplineSpec::annual());
    try {
        build_speed_mean_design(in.panel, in.eps, 0, IndexSets::full(), make_thresholds(in.panel, {}), bp);
        FAIL("expected ParameterError");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("150") != std::string::npos);
    }
}

TEST_CASE("no thresholds reduces the speed design to its linear columns") {
    const auto in = random_inputs(400, 2, 8);
    const auto bp = BasisPair::evaluate(in.panel.timestamps, basis::BSplineSpec::diurnal(), basis::BSplineSpec::annual());
    IndexSets sets = IndexSets::compact();
    sets.families[Family::SpeedAR].own_tv = {1, 2};
    ThresholdPolicy none;
    none.kind = ThresholdPolicy::Kind::None;
    const auto full = build_speed_mean_design(in.panel, in.eps, 1, sets, make_thresholds(in.panel, {}), bp);
    const auto linear = build_speed_mean_design(in.panel, in.eps, 1, sets, make_thresholds(in.panel, none), bp);
    Eigen::Index k = 0;
    for (Eigen::Index c = 0; c < full.cols(); ++c) {
        if (full.columns[static_cast<std::size_t>(c)].threshold != kNoThreshold) continue;
        REQUIRE(k < linear.cols());
        CHECK(linear.columns[static_cast<std::size_t>(k)] == full.columns[static_cast<std::size_t>(c)]);
        CHECK(linear.values.col(k) == full.values.col(c));
        ++k;
    }
    CHECK(k == linear.cols());
}

TEST_CASE("causality: row t reads only data before t, except lag-0 speed in power") {
    const auto base = random_inputs(260, 2, 13);
    const auto bp = BasisPair::evaluate(base.panel.timestamps, basis::BSplineSpec::diurnal(), basis::BSplineSpec::annual());
    IndexSets sets = IndexSets::compact();
    sets.families[Family::PowerSpeedMA].own = {0, 1};
    const auto thr = make_thresholds(base.panel, {});
    const Eigen::Index s = 200;
    auto bumped = base;
    for (Eigen::Index j = 0; j < 2; ++j) {
        bumped.panel.speed(s, j) += 3.0;
        bumped.panel.power(s, j) += 100.0;
        bumped.eps(s, j) += 1.5;
        bumped.epsp(s, j) -= 40.0;
        bumped.sigma(s, j) += 0.7;
        bumped.vsig(s, j) += 0.9;
    }
    for (auto e : {Equation::SpeedMean, Equation::PowerMean, Equation::SpeedVol, Equation::PowerVol}) {
        CAPTURE(to_string(e));
        const auto a = build(e, 0, base, sets, thr, bp);
        const auto b = build(e, 0, bumped, sets, thr, bp);
        const auto r_s = s - static_cast<Eigen::Index>(a.row_offset);
        CHECK(a.values.topRows(r_s) == b.values.topRows(r_s));
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const auto& spec = a.columns[static_cast<std::size_t>(c)];
            const bool lag0 = spec.lag == 0 && spec.family != Family::Intercept;
            if (!lag0) CHECK(a.values(r_s, c) == b.values(r_s, c));
            if (lag0) CHECK(e == Equation::PowerMean);
        }
    }
}

}  // TEST_SUITE
