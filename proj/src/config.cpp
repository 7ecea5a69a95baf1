#include "wpf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace wpf::config {

using nlohmann::json;

namespace {

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

// Typed access to one JSON object that remembers which keys were read.
class Object {
public:
    Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        used_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        out = convert<T>(*it, path_ + "." + key);
    }

    const json* sub(const char* key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    [[nodiscard]] std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!used_.count(item.key())) throw ConfigError("unknown key '" + path_ + "." + item.key() + "'");
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) return v.get<T>();
                if (v.get<std::int64_t>() < 0) throw ConfigError(where + ": expected a nonnegative integer");
            }
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where + ": expected a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where + ": expected a string");
            return v.get<std::string>();
        } else if constexpr (is_vector<T>::value) {
            if (!v.is_array()) throw ConfigError(where + ": expected an array");
            T out;
            for (std::size_t k = 0; k < v.size(); ++k) {
                out.push_back(convert<typename T::value_type>(v[k], where + "[" + std::to_string(k) + "]"));
            }
            return out;
        } else {
            static_assert(sizeof(T) == 0, "unsupported config type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

const std::vector<features::Family>& lagged_families() {
    using features::Family;
    static const std::vector<Family> all{
        Family::SpeedAR,       Family::SpeedMA,       Family::PowerAR,       Family::PowerSpeed,
        Family::PowerMA,       Family::PowerSpeedMA,  Family::SpeedVolShock, Family::SpeedVolGarch,
        Family::PowerVolShock, Family::PowerVolGarch, Family::PowerVolSpeedShock, Family::PowerVolSpeedGarch};
    return all;
}

features::IndexSets index_sets_from_json(const json& v, const std::string& where) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "full") return features::IndexSets::full();
        if (name == "compact") return features::IndexSets::compact();
        throw ConfigError(where + ": unknown preset '" + name + "' (expected full or compact)");
    }
    Object o(v, where);
    features::IndexSets s;
    s.families.clear();
    if (const json* fams = o.sub("families")) {
        if (!fams->is_object()) throw ConfigError(o.path("families") + ": expected an object");
        for (const auto& item : fams->items()) {
            features::Family f{};
            try {
                f = features::family_from_string(item.key());
            } catch (const Error&) {
                throw ConfigError("unknown key '" + o.path("families") + "." + item.key() + "'");
            }
            if (f == features::Family::Intercept) throw ConfigError(o.path("families") + ": intercept has no lag sets");
            Object fo(item.value(), o.path("families") + "." + item.key());
            features::FamilyLags lags;
            fo.get("own", lags.own);
            fo.get("cross", lags.cross);
            fo.get("own_tv", lags.own_tv);
            fo.get("cross_tv", lags.cross_tv);
            fo.get("threshold", lags.threshold);
            fo.finish();
            s.families[f] = lags;
        }
    }
    o.get("mean_intercept_tv", s.mean_intercept_tv);
    o.get("vol_intercept_tv", s.vol_intercept_tv);
    o.finish();
    return s;
}

json index_sets_to_json(const features::IndexSets& s) {
    json fams = json::object();
    for (features::Family f : lagged_families()) {
        const auto it = s.families.find(f);
        if (it == s.families.end()) continue;
        fams[features::to_string(f)] = {{"own", it->second.own},
                                        {"cross", it->second.cross},
                                        {"own_tv", it->second.own_tv},
                                        {"cross_tv", it->second.cross_tv},
                                        {"threshold", it->second.threshold}};
    }
    return {{"families", fams}, {"mean_intercept_tv", s.mean_intercept_tv}, {"vol_intercept_tv", s.vol_intercept_tv}};
}

basis::BSplineSpec spline_from_json(const json& v, const std::string& where, basis::BSplineSpec s) {
    Object o(v, where);
    o.get("degree", s.degree);
    o.get("season_length", s.season_length);
    o.get("n_basis", s.n_basis);
    o.finish();
    return s;
}

json spline_to_json(const basis::BSplineSpec& s) {
    return {{"degree", s.degree}, {"season_length", s.season_length}, {"n_basis", s.n_basis}};
}

const char* threshold_kind_name(features::ThresholdPolicy::Kind k) {
    switch (k) {
        case features::ThresholdPolicy::Kind::Deciles: return "deciles";
        case features::ThresholdPolicy::Kind::Fixed: return "fixed";
        case features::ThresholdPolicy::Kind::None: return "none";
    }
    return "deciles";
}

template <typename Fn>
auto wrap(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

model::ModelConfig model_config_from_json(const json& doc) {
    model::ModelConfig c;
    Object o(doc, "model");
    if (const json* v = o.sub("index_sets")) c.sets = index_sets_from_json(*v, o.path("index_sets"));
    if (const json* v = o.sub("thresholds")) {
        Object t(*v, o.path("thresholds"));
        std::string kind = threshold_kind_name(c.thresholds.kind);
        t.get("kind", kind);
        if (kind == "deciles") {
            c.thresholds.kind = features::ThresholdPolicy::Kind::Deciles;
        } else if (kind == "fixed") {
            c.thresholds.kind = features::ThresholdPolicy::Kind::Fixed;
        } else if (kind == "none") {
            c.thresholds.kind = features::ThresholdPolicy::Kind::None;
        } else {
            throw ConfigError(t.path("kind") + ": expected deciles, fixed or none");
        }
        t.get("speed", c.thresholds.speed_fixed);
        t.get("power", c.thresholds.power_fixed);
        t.finish();
    }
    if (const json* v = o.sub("diurnal")) c.diurnal = spline_from_json(*v, o.path("diurnal"), c.diurnal);
    if (const json* v = o.sub("annual")) c.annual = spline_from_json(*v, o.path("annual"), c.annual);
    o.get("k_max", c.k_max);
    if (const json* v = o.sub("lasso")) {
        Object l(*v, o.path("lasso"));
        l.get("grid_count", c.lasso.grid_count);
        l.get("grid_ratio", c.lasso.grid_ratio);
        l.get("tol", c.lasso.tol);
        l.get("max_sweeps", c.lasso.max_sweeps);
        l.finish();
    }
    o.get("floor_fraction", c.floor_fraction);
    o.get("min_sample", c.min_sample);
    o.finish();
    wrap([&] {
        c.validate();
        return 0;
    });
    return c;
}

json model_config_to_json(const model::ModelConfig& c) {
    return {{"index_sets", index_sets_to_json(c.sets)},
            {"thresholds",
             {{"kind", threshold_kind_name(c.thresholds.kind)},
              {"speed", c.thresholds.speed_fixed},
              {"power", c.thresholds.power_fixed}}},
            {"diurnal", spline_to_json(c.diurnal)},
            {"annual", spline_to_json(c.annual)},
            {"k_max", c.k_max},
            {"lasso",
             {{"grid_count", c.lasso.grid_count},
              {"grid_ratio", c.lasso.grid_ratio},
              {"tol", c.lasso.tol},
              {"max_sweeps", c.lasso.max_sweeps}}},
            {"floor_fraction", c.floor_fraction},
            {"min_sample", c.min_sample}};
}

RunConfig parse_run_config(const json& doc) {
    RunConfig c;
    Object o(doc, "config");
    if (const json* v = o.sub("schema")) {
        Object s(*v, o.path("schema"));
        s.get("timestamp_column", c.schema.timestamp_column);
        s.get("labels", c.schema.labels);
        s.get("fill_gaps", c.fill_gaps);
        if (const json* r = s.sub("range")) {
            Object ro(*r, s.path("range"));
            ro.get("speed_min", c.schema.range.speed_min);
            ro.get("power_min", c.schema.range.power_min);
            ro.get("power_max", c.schema.range.power_max);
            ro.finish();
        }
        s.finish();
    }
    if (const json* v = o.sub("model")) c.model = model_config_from_json(*v);
    if (const json* v = o.sub("benchmarks")) {
        Object b(*v, o.path("benchmarks"));
        b.get("max_order", c.benchmarks.max_order);
        b.get("var_max_order", c.benchmarks.var_max_order);
        b.get("lower", c.benchmarks.lower);
        b.get("upper", c.benchmarks.upper);
        b.get("filter_rows", c.benchmarks.filter_rows);
        b.finish();
        if (c.benchmarks.max_order < 0 || c.benchmarks.var_max_order < 0) {
            throw ConfigError("benchmarks: orders must be >= 0");
        }
        if (!(c.benchmarks.lower < c.benchmarks.upper)) throw ConfigError("benchmarks: lower must be < upper");
        if (c.benchmarks.filter_rows < 1) throw ConfigError("benchmarks.filter_rows must be >= 1");
    }
    if (const json* v = o.sub("backtest")) {
        Object b(*v, o.path("backtest"));
        b.get("n_origins", c.backtest.n_origins);
        b.get("horizons", c.backtest.horizons);
        b.get("in_sample", c.backtest.in_sample);
        b.get("seed", c.backtest.seed);
        b.get("models", c.backtest.models);
        std::string refit = eval::to_string(c.backtest.refit);
        b.get("refit", refit);
        c.backtest.refit = wrap([&] { return eval::parse_refit_policy(refit); });
        b.get("density_horizons", c.backtest.density_horizons);
        b.get("table_horizons", c.backtest.table_horizons);
        b.get("density_points", c.backtest.density_points);
        b.finish();
        wrap([&] {
            c.backtest.validate();
            return 0;
        });
    }
    if (const json* v = o.sub("simulate")) {
        Object s(*v, o.path("simulate"));
        s.get("rows", c.simulate.rows);
        s.get("turbines", c.simulate.turbines);
        s.get("seed", c.simulate.seed);
        s.get("start_epoch", c.simulate.start_epoch);
        s.finish();
        if (c.simulate.rows < 1) throw ConfigError("simulate.rows must be >= 1");
        if (c.simulate.turbines < 1) throw ConfigError("simulate.turbines must be >= 1");
    }
    if (const json* v = o.sub("forecast")) {
        Object f(*v, o.path("forecast"));
        f.get("origin", c.forecast.origin);
        f.get("horizon", c.forecast.horizon);
        f.get("n_paths", c.forecast.n_paths);
        f.get("seed", c.forecast.seed);
        f.get("burn_in", c.forecast.burn_in);
        f.finish();
        if (c.forecast.horizon < 1) throw ConfigError("forecast.horizon must be >= 1");
        if (c.forecast.n_paths < 0) throw ConfigError("forecast.n_paths must be >= 0");
        if (c.forecast.burn_in < 0) throw ConfigError("forecast.burn_in must be >= 0");
    }
    if (const json* v = o.sub("inputs")) {
        Object in(*v, o.path("inputs"));
        in.get("raw", c.inputs.raw);
        in.get("panel", c.inputs.panel);
        in.get("model", c.inputs.model);
        in.finish();
    }
    if (const json* v = o.sub("analyze")) {
        Object a(*v, o.path("analyze"));
        a.get("span", c.analyze.span);
        a.get("turbine", c.analyze.turbine);
        a.get("equation", c.analyze.equation);
        a.get("basis", c.analyze.basis);
        a.finish();
        if (c.analyze.span < 1 || c.analyze.span % 2 == 0) throw ConfigError("analyze.span must be odd and >= 1");
        if (c.analyze.turbine < 0) throw ConfigError("analyze.turbine must be >= 0");
        wrap([&] { return features::equation_from_string(c.analyze.equation); });
        static const std::set<std::string> bases{"diurnal", "annual", "interaction", "cumulative"};
        if (!bases.count(c.analyze.basis)) throw ConfigError("analyze.basis must be diurnal, annual, interaction or cumulative");
    }
    o.get("out_dir", c.out_dir);
    o.get("workers", c.workers);
    o.finish();
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    c.model.workers = c.workers;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
    return {{"schema",
             {{"timestamp_column", c.schema.timestamp_column},
              {"labels", c.schema.labels},
              {"fill_gaps", c.fill_gaps},
              {"range",
               {{"speed_min", c.schema.range.speed_min},
                {"power_min", c.schema.range.power_min},
                {"power_max", c.schema.range.power_max}}}}},
            {"model", model_config_to_json(c.model)},
            {"benchmarks",
             {{"max_order", c.benchmarks.max_order},
              {"var_max_order", c.benchmarks.var_max_order},
              {"lower", c.benchmarks.lower},
              {"upper", c.benchmarks.upper},
              {"filter_rows", c.benchmarks.filter_rows}}},
            {"backtest",
             {{"n_origins", c.backtest.n_origins},
              {"horizons", c.backtest.horizons},
              {"in_sample", c.backtest.in_sample},
              {"seed", c.backtest.seed},
              {"models", c.backtest.models},
              {"refit", eval::to_string(c.backtest.refit)},
              {"density_horizons", c.backtest.density_horizons},
              {"table_horizons", c.backtest.table_horizons},
              {"density_points", c.backtest.density_points}}},
            {"simulate",
             {{"rows", c.simulate.rows},
              {"turbines", c.simulate.turbines},
              {"seed", c.simulate.seed},
              {"start_epoch", c.simulate.start_epoch}}},
            {"forecast",
             {{"origin", c.forecast.origin},
              {"horizon", c.forecast.horizon},
              {"n_paths", c.forecast.n_paths},
              {"seed", c.forecast.seed},
              {"burn_in", c.forecast.burn_in}}},
            {"inputs", {{"raw", c.inputs.raw}, {"panel", c.inputs.panel}, {"model", c.inputs.model}}},
            {"analyze",
             {{"span", c.analyze.span},
              {"turbine", c.analyze.turbine},
              {"equation", c.analyze.equation},
              {"basis", c.analyze.basis}}},
            {"out_dir", c.out_dir},
            {"workers", c.workers}};
}

void override_seed(RunConfig& c, std::uint64_t seed) {
    c.simulate.seed = seed;
    c.forecast.seed = seed;
    c.backtest.seed = seed;
}

void write_effective_config(const std::filesystem::path& path, const RunConfig& c) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path.string() + "'");
    out << to_json(c).dump(2) << '\n';
}

}  // namespace wpf::config
