#include "wpf/error.hpp"
#include "wpf/eval.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

using namespace wpf;

namespace {

data::TurbinePanel ar_panel(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd w(n, d), p(n, d);
    w.row(0).setConstant(7.0);
    p.row(0).setConstant(400.0);
    for (Eigen::Index t = 1; t < n; ++t) {
        for (Eigen::Index i = 0; i < d; ++i) {
            w(t, i) = 0.7 + 0.9 * w(t - 1, i) + 0.5 * z(rng);
            p(t, i) = 0.8 * p(t - 1, i) + 8.0 * w(t, i) + 20.0 * z(rng);
        }
    }
    return test::panel_from(w, p);
}

eval::BacktestSpec small_spec(int origins = 40) {
    eval::BacktestSpec s;
    s.n_origins = origins;
    s.horizons = {1, 2, 6, 24};
    s.density_horizons = {1, 24};
    s.table_horizons = {1, 6, 24};
    s.in_sample = 1000;
    s.seed = 3;
    s.models = {"persistence"};
    s.density_points = 256;
    return s;
}

eval::NamedModel named(const std::string& id) {
    return {id, [id] { return bench::make_benchmark(id); }};
}

// Persistence that fails with an exception at some origins and returns NaN at others.
class Flaky final : public bench::Forecaster {
public:
    Flaky(std::set<std::size_t> throw_at, std::set<std::size_t> nan_at)
        : throw_at_(std::move(throw_at)), nan_at_(std::move(nan_at)) {}
    std::string id() const override { return "flaky"; }
    void fit(const data::TurbinePanel&, std::size_t, std::size_t, const std::vector<int>&) override {}
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override {
        if (throw_at_.count(origin)) throw DegenerateError("scripted failure");
        Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), panel.power.cols());
        for (Eigen::Index h = 0; h < out.rows(); ++h) out.row(h) = panel.power.row(static_cast<Eigen::Index>(origin)).array() + 5.0;
        if (nan_at_.count(origin)) out(0, 0) = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

private:
    std::set<std::size_t> throw_at_, nan_at_;
};

// Records the fit windows it receives.
struct FitLog {
    std::mutex mu;
    std::vector<std::pair<std::size_t, std::size_t>> windows;
};

class Logged final : public bench::Forecaster {
public:
    explicit Logged(FitLog* log) : log_(log) {}
    std::string id() const override { return "logged"; }
    void fit(const data::TurbinePanel&, std::size_t begin, std::size_t end, const std::vector<int>&) override {
        std::lock_guard lock(log_->mu);
        log_->windows.emplace_back(begin, end);
    }
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override {
        return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(horizons.size()), panel.power.cols(),
                                         panel.power(static_cast<Eigen::Index>(origin), 0));
    }

private:
    FitLog* log_;
};

double trapezoid(const std::vector<double>& grid, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t g = 1; g < grid.size(); ++g) s += 0.5 * (f[g] + f[g - 1]) * (grid[g] - grid[g - 1]);
    return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("mae, turbine mean and dmae") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(eval::mae(a, a) == 0.0);
    CHECK(eval::mae(std::vector<double>{3.5, 4.5, 5.5}, a) == doctest::Approx(2.5));
    CHECK(eval::mae_mean(std::vector<double>{2.0, 4.0}) == 3.0);
    CHECK_THROWS_AS(eval::mae(std::vector<double>{1.0}, a), ParameterError);
    CHECK_THROWS_AS(eval::mae(std::vector<double>{1.0, NAN, 3.0}, a), ParameterError);

    const Eigen::VectorXd p = Eigen::Vector3d(10.0, 12.0, 15.0);
    const Eigen::VectorXd m = Eigen::Vector3d(6.0, 12.0, 14.0);
    const Eigen::VectorXd b = Eigen::Vector3d(9.0, 13.0, 11.0);
    CHECK(eval::dmae(p, p).isZero());
    CHECK(eval::dmae(m, p)(0) == -4.0);
    CHECK((eval::dmae(m, p) - eval::dmae(b, p) - (m - b)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(eval::dmae(m, Eigen::Vector2d::Zero()), ParameterError);
}

TEST_CASE("standard error of the MAE") {
    CHECK(eval::mae_standard_deviation(std::vector<double>(10, 3.0)) == 0.0);
    // {0, 2}: sample SD sqrt(2), over sqrt(2).
    CHECK(eval::mae_standard_deviation(std::vector<double>{0.0, 2.0}) == doctest::Approx(1.0));
    std::mt19937_64 rng(1);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> e(200), e3(200);
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = ex(rng);
        e3[i] = 3.0 * e[i];
    }
    CHECK(eval::mae_standard_deviation(e3) == doctest::Approx(3.0 * eval::mae_standard_deviation(e)));
}

TEST_CASE("kernel density") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    std::vector<double> e(4000);
    for (auto& v : e) v = z(rng);
    const double bw = eval::silverman_bandwidth(e);
    CHECK(bw == doctest::Approx(0.9 * std::pow(4000.0, -0.2)).epsilon(0.06));
    const auto grid = linspace(-8.0, 8.0, 801);
    const auto f = eval::error_density(e, grid, bw);
    CHECK(trapezoid(grid, f) == doctest::Approx(1.0).epsilon(1e-3));
    // Symmetric sample (e and -e) gives an exactly symmetric estimate.
    std::vector<double> sym = e;
    for (double v : e) sym.push_back(-v);
    const auto fs = eval::error_density(sym, grid, bw);
    double asym = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) asym = std::max(asym, std::abs(fs[g] - fs[grid.size() - 1 - g]));
    CHECK(asym < 1e-12);
    // Point mass: single peak at the value; bandwidth fallback 1.
    const std::vector<double> pm(50, 1.5);
    CHECK(eval::silverman_bandwidth(pm) == 1.0);
    const auto fp = eval::error_density(pm, grid, 0.1);
    const auto peak = std::max_element(fp.begin(), fp.end()) - fp.begin();
    CHECK(grid[static_cast<std::size_t>(peak)] == doctest::Approx(1.5));
    // Wide bandwidth flattens.
    const auto flat = eval::error_density(e, linspace(-2.0, 2.0, 41), 1e4);
    CHECK(*std::max_element(flat.begin(), flat.end()) - *std::min_element(flat.begin(), flat.end()) < 1e-8);
    CHECK_THROWS_AS(eval::error_density(e, grid, 0.0), ParameterError);
    CHECK_THROWS_AS(eval::error_density(std::vector<double>{}, grid, 1.0), ParameterError);
}

TEST_CASE("origin sampling") {
    auto spec = small_spec(50);
    const auto o = eval::sample_origins(2000, spec);
    REQUIRE(o.size() == 50);
    CHECK(std::is_sorted(o.begin(), o.end()));
    CHECK(std::set<std::size_t>(o.begin(), o.end()).size() == 50);
    CHECK(o.front() >= spec.in_sample - 1);
    CHECK(o.back() + 24 <= 1999);
    CHECK(eval::sample_origins(2000, spec) == o);
    spec.seed = 4;
    CHECK(eval::sample_origins(2000, spec) != o);
    // All admissible origins requested: the full range.
    spec.n_origins = 2000 - 1000 - 24 + 1;
    const auto all = eval::sample_origins(2000, spec);
    CHECK(all.front() == 999);
    CHECK(all.back() == 1975);
    spec.n_origins += 1;
    CHECK_THROWS_AS(eval::sample_origins(2000, spec), ParameterError);
    CHECK_THROWS_AS(eval::sample_origins(1010, small_spec()), ParameterError);

    // Uniformity: pooled over seeds, each admissible origin appears about equally often.
    auto u = small_spec(10);
    std::vector<int> counts(2000, 0);
    for (std::uint64_t s = 0; s < 2000; ++s) {
        u.seed = s;
        for (auto v : eval::sample_origins(1124, u)) counts[v]++;
    }
    // 101 admissible origins, 20000 draws: expected 198 each.
    double chi2 = 0.0;
    for (std::size_t v = 999; v <= 1099; ++v) chi2 += (counts[v] - 198.0) * (counts[v] - 198.0) / 198.0;
    CHECK(chi2 < 160.0);  // 100 dof, p ~ 1e-4
}

TEST_CASE("persistence-only backtest reproduces a direct computation") {
    const auto panel = ar_panel(1600, 2, 5);
    const auto spec = small_spec();
    const auto rep = eval::run_backtest(panel, spec, {named("persistence")});
    const auto& m = rep.find("persistence");
    REQUIRE(m.origins.size() == 40);
    CHECK(m.failures.empty());
    for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
        const int k = spec.horizons[h];
        double turb_mean = 0.0;
        for (int i = 0; i < 2; ++i) {
            std::vector<double> f, a, abs;
            for (std::size_t o : rep.origins) {
                f.push_back(panel.power(static_cast<Eigen::Index>(o), i));
                a.push_back(panel.power(static_cast<Eigen::Index>(o) + k, i));
                abs.push_back(std::abs(a.back() - f.back()));
            }
            CHECK(m.mae(static_cast<Eigen::Index>(h), i) == eval::mae(f, a));
            CHECK(m.sd(static_cast<Eigen::Index>(h), i) == eval::mae_standard_deviation(abs));
            turb_mean += eval::mae(f, a) / 2.0;
        }
        CHECK(m.mae_k(static_cast<Eigen::Index>(h)) == doctest::Approx(turb_mean).epsilon(1e-14));
        CHECK(m.dmae_k(static_cast<Eigen::Index>(h)) == 0.0);
        CHECK(m.mae_k(static_cast<Eigen::Index>(h)) >= 0.0);
    }
    CHECK(m.density_errors.size() == 2);
    CHECK(m.density_errors[0].size() == 80);
}

TEST_CASE("identical models, evaluation order and worker count") {
    const auto panel = ar_panel(1600, 2, 6);
    const auto spec = small_spec();
    const auto a = eval::run_backtest(panel, spec, {named("ar"), named("persistence"), named("wppt")});
    const auto b = eval::run_backtest(panel, spec, {named("wppt"), named("ar")}, 3);
    for (const std::string id : {"ar", "wppt"}) {
        CHECK(a.find(id).mae == b.find(id).mae);
        CHECK(a.find(id).dmae_k == b.find(id).dmae_k);
        CHECK(a.find(id).sd_k == b.find(id).sd_k);
    }
    const auto twin = eval::run_backtest(
        panel, spec, {named("ar"), {"ar_again", [] { return bench::make_benchmark("ar"); }}});
    CHECK(twin.find("ar").mae == twin.find("ar_again").mae);
    CHECK(twin.origins == a.origins);
}

TEST_CASE("failures are recorded and excluded; dmae uses the same origins") {
    const auto panel = ar_panel(1600, 2, 7);
    const auto spec = small_spec(30);
    const auto origins = eval::sample_origins(panel.rows(), spec);
    const std::set<std::size_t> bad_throw{origins[2], origins[10]};
    const std::set<std::size_t> bad_nan{origins[20]};
    const eval::NamedModel flaky{"flaky", [&] { return std::make_unique<Flaky>(bad_throw, bad_nan); }};
    const auto rep = eval::run_backtest(panel, spec, {flaky, named("persistence")});
    const auto& f = rep.find("flaky");
    CHECK(f.failures.size() == 3);
    CHECK(f.origins.size() == 27);
    CHECK(f.failures[0].find("scripted failure") != std::string::npos);
    CHECK(f.failures[0].find(std::to_string(origins[2])) != std::string::npos);
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].find("3 of 30") != std::string::npos);
    // Forecast is persistence + 5, so on shared origins DMAE = mean |e - 5| - |e|.
    for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
        double sum_f = 0.0, sum_p = 0.0;
        for (int i = 0; i < 2; ++i) {
            for (std::size_t o : f.origins) {
                const double e = panel.power(static_cast<Eigen::Index>(o) + spec.horizons[h], i) -
                                 panel.power(static_cast<Eigen::Index>(o), i);
                sum_f += std::abs(e - 5.0);
                sum_p += std::abs(e);
            }
        }
        CHECK(f.dmae_k(static_cast<Eigen::Index>(h)) == doctest::Approx((sum_f - sum_p) / (2.0 * 27)).epsilon(1e-12));
    }
    CHECK(rep.find("persistence").origins.size() == 30);
}

TEST_CASE("a fit failure fails every origin") {
    const auto panel = ar_panel(1600, 1, 8);
    auto flat = panel;
    flat.speed.setConstant(3.0);
    const auto rep = eval::run_backtest(flat, small_spec(), {named("wppt")});
    CHECK(rep.find("wppt").failures.size() == 40);
    CHECK(std::isnan(rep.find("wppt").mae_k(0)));
    CHECK(summary_table(rep).find("n/a") != std::string::npos);
}

TEST_CASE("per-origin refit windows") {
    const auto panel = ar_panel(1600, 1, 9);
    auto spec = small_spec(15);
    spec.refit = eval::RefitPolicy::PerOrigin;
    FitLog log;
    const eval::NamedModel logged{"logged", [&] { return std::make_unique<Logged>(&log); }};
    const auto rep = eval::run_backtest(panel, spec, {logged}, 2);
    REQUIRE(log.windows.size() == 15);
    std::sort(log.windows.begin(), log.windows.end());
    for (std::size_t l = 0; l < 15; ++l) {
        CHECK(log.windows[l].second == rep.origins[l] + 1);
        CHECK(log.windows[l].second - log.windows[l].first == spec.in_sample);
    }
    CHECK(rep.find("logged").dmae_k.isZero());

    log.windows.clear();
    spec.refit = eval::RefitPolicy::Once;
    (void)eval::run_backtest(panel, spec, {logged});
    REQUIRE(log.windows.size() == 1);
    CHECK(log.windows[0] == std::pair<std::size_t, std::size_t>(0, spec.in_sample));
    CHECK(eval::parse_refit_policy("per_origin") == eval::RefitPolicy::PerOrigin);
    CHECK(std::string(eval::to_string(eval::RefitPolicy::Once)) == "once");
    CHECK_THROWS(eval::parse_refit_policy("weekly"));
}

TEST_CASE("excluding a turbine changes only its rows") {
    const auto panel = ar_panel(1600, 3, 10);
    const auto spec = small_spec();
    const auto all = eval::run_backtest(panel, spec, {named("ar")});
    Eigen::MatrixXd w2(panel.speed.rows(), 2), p2(panel.power.rows(), 2);
    w2 << panel.speed.col(0), panel.speed.col(2);
    p2 << panel.power.col(0), panel.power.col(2);
    const auto two = eval::run_backtest(test::panel_from(w2, p2), spec, {named("ar")});
    const auto& a = all.find("ar");
    const auto& b = two.find("ar");
    CHECK(a.mae.col(0) == b.mae.col(0));
    CHECK(a.mae.col(2) == b.mae.col(1));
    const Eigen::VectorXd recomputed = 0.5 * (a.mae.col(0) + a.mae.col(2));
    CHECK((b.mae_k - recomputed).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lasso forecaster wraps the joint model") {
    model::ModelConfig cfg;
    cfg.sets = features::IndexSets::compact();
    cfg.min_sample = 1500;
    const auto truth = forecast::demo_truth(2);
    const auto sim = forecast::simulate_series(truth, cfg.diurnal, cfg.annual, 2600, 4);
    eval::LassoForecaster f(cfg, 500);
    CHECK_THROWS_AS((void)f.fitted(), ParameterError);
    f.fit(sim.panel, 0, 2000, {1, 6});
    const auto out = f.forecast(sim.panel, 2300, {1, 6});
    forecast::ForecastOptions o;
    o.horizon = 6;
    o.burn_in = 500;
    const auto r = forecast::point_forecast(f.fitted(), sim.panel, 2300, o);
    CHECK(out(0, 1) == r.point_power(0, 1));
    CHECK(out(1, 0) == r.point_power(5, 0));
    CHECK(f.fitted().sample_end == 2000);

    const auto models = eval::resolve_models({"lasso", "persistence", "gwppt"}, cfg);
    CHECK(models.size() == 3);
    CHECK(models[0].make()->id() == "lasso");
    CHECK_THROWS_AS(eval::resolve_models({"lasso", "lasso"}, cfg), ParameterError);
    CHECK_THROWS_AS(eval::resolve_models({"gbm"}, cfg), ParameterError);
}

TEST_CASE("report files") {
    const auto panel = ar_panel(1600, 2, 11);
    const auto rep = eval::run_backtest(panel, small_spec(), {named("persistence"), named("ar")});
    test::TempDir dir("report");
    eval::write_report(dir.path(), rep);
    for (const char* name : {"mae.csv", "dmae.csv", "density_1.csv", "density_24.csv", "origins.csv", "summary.md",
                             "timing.txt"}) {
        CHECK(std::filesystem::exists(dir / name));
    }
    std::ifstream in(dir / "mae.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "model,turbine,k,mae,sd");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2 * 4 * 3);

    std::ifstream dens(dir / "density_24.csv");
    std::getline(dens, line);
    CHECK(line == "error,persistence,ar");
    std::vector<double> grid, fp;
    while (std::getline(dens, line)) {
        std::istringstream s(line);
        std::string a, b;
        std::getline(s, a, ',');
        std::getline(s, b, ',');
        grid.push_back(std::stod(a));
        fp.push_back(std::stod(b));
    }
    CHECK(grid.size() == 256);
    CHECK(trapezoid(grid, fp) == doctest::Approx(1.0).epsilon(1e-3));

    const auto table = eval::summary_table(rep);
    CHECK(table.find("| k | persistence | ar |") == 0);
    CHECK(table.find("| 24 |") != std::string::npos);
    CHECK(table.find('*') != std::string::npos);
}

}  // TEST_SUITE
