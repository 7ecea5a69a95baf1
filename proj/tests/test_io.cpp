#include "wpf/config.hpp"
#include "wpf/error.hpp"
#include "wpf/forecast.hpp"
#include "wpf/model_io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace wpf;
using nlohmann::json;

namespace {

model::FittedJointModel small_fit() {
    model::ModelConfig cfg;
    cfg.sets = features::IndexSets::compact();
    cfg.min_sample = 1500;
    const auto sim = forecast::simulate_series(forecast::demo_truth(2), cfg.diurnal, cfg.annual, 2000, 9);
    return model::fit_joint_model(sim.panel, cfg);
}

std::string saved(const model::FittedJointModel& m) {
    std::ostringstream out;
    model::save_model(out, m);
    return out.str();
}

model::FittedJointModel loaded(const std::string& text) {
    std::istringstream in(text);
    return model::load_model(in);
}

std::string replace_line(std::string text, const std::string& prefix, const std::string& with) {
    const auto a = text.find("\n" + prefix);
    REQUIRE(a != std::string::npos);
    const auto b = text.find('\n', a + 1);
    return text.replace(a + 1, b - a - 1, with);
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty document gives the defaults") {
    const auto c = config::parse_run_config(json::object());
    CHECK(c.workers == 1);
    CHECK(c.out_dir == "out");
    CHECK(c.model.k_max == 2);
    CHECK(c.model.sets.max_lag() == 150);
    CHECK(c.backtest.n_origins == 1000);
    CHECK(c.backtest.in_sample == 52830);
    CHECK(c.backtest.horizons.size() == 288);
    CHECK(c.forecast.horizon == 288);
    CHECK(c.analyze.span == 5);
}

TEST_CASE("expanded document is a fixed point") {
    const json doc = json::parse(R"({
        "model": {"index_sets": "compact", "k_max": 1, "lasso": {"tol": 1e-9}},
        "backtest": {"n_origins": 20, "models": ["persistence", "ar"], "refit": "per_origin"},
        "forecast": {"origin": -5, "n_paths": 50},
        "inputs": {"panel": "p.csv"},
        "analyze": {"span": 7, "basis": "cumulative", "equation": "power_vol"},
        "workers": 3
    })");
    const auto c = config::parse_run_config(doc);
    CHECK(c.model.k_max == 1);
    CHECK(c.model.lasso.tol == 1e-9);
    CHECK(c.model.sets.max_lag() == 3);
    CHECK(c.backtest.refit == eval::RefitPolicy::PerOrigin);
    CHECK(c.forecast.origin == -5);
    CHECK(c.inputs.panel == "p.csv");
    CHECK(c.analyze.basis == "cumulative");
    const json full = config::to_json(c);
    CHECK(config::to_json(config::parse_run_config(full)) == full);
    // The expanded form spells out the compact lag sets.
    CHECK(full["model"]["index_sets"]["families"]["speed_ar"]["own"] == json::array({1, 2, 3}));
    const auto round = config::parse_run_config(full);
    for (const auto& [f, lags] : c.model.sets.families) {
        CHECK(round.model.sets.lags(f, 0, 0) == lags.own);
        CHECK(round.model.sets.lags(f, 0, 1) == lags.cross);
    }
}

TEST_CASE("unknown keys and bad values are rejected") {
    auto bad = [](const char* text) {
        CHECK_THROWS_AS(config::parse_run_config(json::parse(text)), ConfigError);
    };
    bad(R"({"wokers": 2})");
    bad(R"({"model": {"kmax": 2}})");
    bad(R"({"model": {"index_sets": "reduced"}})");
    bad(R"({"model": {"index_sets": {"families": {"speed_arr": {"own": [1]}}}}})");
    bad(R"({"workers": "two"})");
    bad(R"({"workers": 0})");
    bad(R"({"backtest": {"n_origins": -3}})");
    bad(R"({"backtest": {"refit": "weekly"}})");
    bad(R"({"model": {"thresholds": {"kind": "quartiles"}}})");
    bad(R"({"benchmarks": {"lower": 10, "upper": 0}})");
    bad(R"({"analyze": {"span": 4}})");
    bad(R"({"analyze": {"basis": "weekly"}})");
    bad(R"({"analyze": {"equation": "speed"}})");
    bad(R"({"forecast": {"horizon": 0}})");
    bad(R"([1, 2])");
    try {
        (void)config::parse_run_config(json::parse(R"({"model": {"lasso": {"tolerance": 1}}})"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("model.lasso.tolerance") != std::string::npos);
    }
}

TEST_CASE("files: comments allowed, errors typed") {
    test::TempDir dir("cfg");
    {
        std::ofstream f(dir / "c.json");
        f << "{\n  // comment\n  \"workers\": 2, /* block */ \"simulate\": {\"rows\": 100}\n}\n";
    }
    const auto c = config::load_run_config(dir / "c.json");
    CHECK(c.workers == 2);
    CHECK(c.simulate.rows == 100);
    {
        std::ofstream f(dir / "bad.json");
        f << "{ \"workers\": 2, }";
    }
    CHECK_THROWS_AS(config::load_run_config(dir / "bad.json"), ConfigError);
    CHECK_THROWS_AS(config::load_run_config(dir / "none.json"), FileError);

    config::write_effective_config(dir / "eff.json", c);
    const auto again = config::load_run_config(dir / "eff.json");
    CHECK(config::to_json(again) == config::to_json(c));
}

TEST_CASE("seed override reaches every seed") {
    auto c = config::parse_run_config(json::object());
    config::override_seed(c, 99);
    CHECK(c.simulate.seed == 99);
    CHECK(c.forecast.seed == 99);
    CHECK(c.backtest.seed == 99);
}

TEST_CASE("model config JSON round trip") {
    model::ModelConfig m;
    m.sets = features::IndexSets::compact();
    m.thresholds.kind = features::ThresholdPolicy::Kind::Fixed;
    m.thresholds.speed_fixed = {4.0, 9.5};
    m.thresholds.power_fixed = {100.0};
    m.floor_fraction = 0.01;
    m.min_sample = 321;
    const auto back = config::model_config_from_json(config::model_config_to_json(m));
    CHECK(config::model_config_to_json(back) == config::model_config_to_json(m));
    CHECK(back.thresholds.speed_fixed == m.thresholds.speed_fixed);
    CHECK(back.min_sample == 321);
}

}  // TEST_SUITE

TEST_SUITE("model_io") {

TEST_CASE("save/load is exact") {
    const auto m = small_fit();
    const std::string text = saved(m);
    CHECK(text.rfind("wpf-model 1\n", 0) == 0);
    const auto back = loaded(text);
    CHECK(saved(back) == text);
    CHECK(back.labels == m.labels);
    CHECK(back.iterations == m.iterations);
    CHECK(back.sample_begin == m.sample_begin);
    CHECK(back.sample_end == m.sample_end);
    CHECK(back.thresholds.speed == m.thresholds.speed);
    CHECK(back.z_pool == m.z_pool);
    CHECK(back.u_pool == m.u_pool);
    CHECK(back.speed_vol_floor == m.speed_vol_floor);
    for (std::size_t i = 0; i < m.turbines(); ++i) {
        for (std::size_t e = 0; e < 4; ++e) {
            const auto& a = m.equations[i][e];
            const auto& b = back.equations[i][e];
            CHECK(a.lambda == b.lambda);
            CHECK(a.columns == b.columns);
            REQUIRE(a.terms.size() == b.terms.size());
            for (std::size_t t = 0; t < a.terms.size(); ++t) {
                CHECK(a.terms[t].spec == b.terms[t].spec);
                CHECK(a.terms[t].coef == b.terms[t].coef);
            }
        }
    }
    // Forecasts from the reloaded model are bit-identical.
    const auto sim = forecast::simulate_series(forecast::demo_truth(2), m.config.diurnal, m.config.annual, 2600, 10);
    forecast::ForecastOptions o;
    o.horizon = 24;
    o.n_paths = 120;
    o.seed = 4;
    const auto fa = forecast::bootstrap_forecast(m, sim.panel, 2500, o);
    const auto fb = forecast::bootstrap_forecast(back, sim.panel, 2500, o);
    CHECK(fa.point_power == fb.point_power);
    CHECK(fa.q_speed == fb.q_speed);
    CHECK(fa.q_power == fb.q_power);

    test::TempDir dir("model");
    model::save_model(dir / "m.wpf", m);
    CHECK(saved(model::load_model(dir / "m.wpf")) == text);
    CHECK_THROWS_AS(model::load_model(dir / "missing.wpf"), FileError);
}

TEST_CASE("malformed model files") {
    const std::string text = saved(small_fit());
    CHECK_THROWS_AS(loaded(""), ParseError);
    CHECK_THROWS_AS(loaded("wpf-model 2\n" + text.substr(text.find('\n') + 1)), ParseError);
    CHECK_THROWS_AS(loaded("not-a-model 1\n"), ParseError);
    CHECK_THROWS_AS(loaded(text.substr(0, text.size() / 2)), ParseError);
    CHECK_THROWS_AS(loaded(text.substr(0, text.rfind("[end]"))), ParseError);
    CHECK_THROWS_AS(loaded(replace_line(text, "iterations=", "iterations=two")), ParseError);
    try {
        (void)loaded(replace_line(text, "labels=", "labels=T1"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("model file") != std::string::npos);
    }
}

}  // TEST_SUITE
