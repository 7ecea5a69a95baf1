#include "wpf/features.hpp"

#include "wpf/error.hpp"
#include "wpf/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace wpf::features {

namespace {

struct FamilyName {
    Family family;
    const char* name;
};

constexpr FamilyName kFamilyNames[] = {
    {Family::Intercept, "intercept"},
    {Family::SpeedAR, "speed_ar"},
    {Family::SpeedMA, "speed_ma"},
    {Family::PowerAR, "power_ar"},
    {Family::PowerSpeed, "power_speed"},
    {Family::PowerMA, "power_ma"},
    {Family::PowerSpeedMA, "power_speed_ma"},
    {Family::SpeedVolShock, "speed_vol_shock"},
    {Family::SpeedVolGarch, "speed_vol_garch"},
    {Family::PowerVolShock, "power_vol_shock"},
    {Family::PowerVolGarch, "power_vol_garch"},
    {Family::PowerVolSpeedShock, "power_vol_speed_shock"},
    {Family::PowerVolSpeedGarch, "power_vol_speed_garch"},
};

constexpr const char* kEquationNames[] = {"speed_mean", "power_mean", "speed_vol", "power_vol"};

bool contains(const std::vector<int>& v, int k) { return std::find(v.begin(), v.end(), k) != v.end(); }

}  // namespace

const char* to_string(Equation e) { return kEquationNames[static_cast<int>(e)]; }

const char* to_string(Family f) {
    for (const auto& fn : kFamilyNames) {
        if (fn.family == f) return fn.name;
    }
    return "?";
}

const char* to_string(Sign s) {
    switch (s) {
        case Sign::Plus: return "+";
        case Sign::Minus: return "-";
        default: return "";
    }
}

Equation equation_from_string(const std::string& s) {
    for (int e = 0; e < 4; ++e) {
        if (s == kEquationNames[e]) return static_cast<Equation>(e);
    }
    throw ParseError("unknown equation '" + s + "'");
}

Family family_from_string(const std::string& s) {
    for (const auto& fn : kFamilyNames) {
        if (s == fn.name) return fn.family;
    }
    throw ParseError("unknown coefficient family '" + s + "'");
}

Sign sign_from_string(const std::string& s) {
    if (s.empty() || s == "none") return Sign::None;
    if (s == "+" || s == "plus") return Sign::Plus;
    if (s == "-" || s == "minus") return Sign::Minus;
    throw ParseError("unknown sign '" + s + "'");
}

std::vector<Family> families_of(Equation e) {
    switch (e) {
        case Equation::SpeedMean: return {Family::SpeedAR, Family::SpeedMA};
        case Equation::PowerMean:
            return {Family::PowerAR, Family::PowerSpeed, Family::PowerMA, Family::PowerSpeedMA};
        case Equation::SpeedVol: return {Family::SpeedVolShock, Family::SpeedVolGarch};
        case Equation::PowerVol:
            return {Family::PowerVolShock, Family::PowerVolGarch, Family::PowerVolSpeedShock,
                    Family::PowerVolSpeedGarch};
    }
    return {};
}

Equation equation_of(Family f) {
    for (int e = 0; e < 4; ++e) {
        const auto fams = families_of(static_cast<Equation>(e));
        if (std::find(fams.begin(), fams.end(), f) != fams.end()) return static_cast<Equation>(e);
    }
    throw ParameterError("intercept family belongs to every equation");
}

Series source_series(Family f) {
    switch (f) {
        case Family::SpeedAR:
        case Family::PowerSpeed: return Series::Speed;
        case Family::PowerAR: return Series::Power;
        case Family::SpeedMA:
        case Family::PowerSpeedMA:
        case Family::SpeedVolShock:
        case Family::PowerVolSpeedShock: return Series::SpeedResidual;
        case Family::PowerMA:
        case Family::PowerVolShock: return Series::PowerResidual;
        case Family::SpeedVolGarch:
        case Family::PowerVolSpeedGarch: return Series::SpeedVol;
        case Family::PowerVolGarch: return Series::PowerVolCbrt;
        case Family::Intercept: break;
    }
    throw ParameterError("intercept has no source series");
}

bool is_shock_family(Family f) {
    return f == Family::SpeedVolShock || f == Family::PowerVolShock || f == Family::PowerVolSpeedShock;
}

bool allows_lag_zero(Family f) { return f == Family::PowerSpeed || f == Family::PowerSpeedMA; }

bool is_threshold_family(Family f) {
    return f == Family::SpeedAR || f == Family::PowerAR || f == Family::PowerSpeed;
}

basis::BasisKind basis_kind(Equation e) {
    return (e == Equation::SpeedMean || e == Equation::PowerMean) ? basis::BasisKind::Cumulative
                                                                  : basis::BasisKind::Plain;
}

std::string describe(const ColumnSpec& c) {
    std::string s = std::string(to_string(c.equation)) + ":" + to_string(c.family);
    if (c.family != Family::Intercept) {
        s += "[j=" + std::to_string(c.source) + ",k=" + std::to_string(c.lag);
        if (c.threshold != kNoThreshold) s += ",c=" + text::format_double(c.threshold);
        if (c.sign != Sign::None) s += std::string(",") + to_string(c.sign);
        s += "]";
    }
    if (c.basis >= 0) s += "*B" + std::to_string(c.basis);
    return s;
}

double transform(const ColumnSpec& c, double raw) {
    switch (c.family) {
        case Family::Intercept: return 1.0;
        case Family::SpeedAR:
        case Family::PowerAR:
        case Family::PowerSpeed: return threshold_regressor(raw, c.threshold);
        case Family::SpeedVolShock:
            return c.sign == Sign::Plus ? std::max(raw, 0.0) : std::max(-raw, 0.0);
        case Family::PowerVolShock:
        case Family::PowerVolSpeedShock:
            return std::cbrt(c.sign == Sign::Plus ? std::max(raw, 0.0) : std::max(-raw, 0.0));
        case Family::PowerVolSpeedGarch: return std::cbrt(raw);
        case Family::SpeedMA:
        case Family::PowerMA:
        case Family::PowerSpeedMA:
        case Family::SpeedVolGarch:
        case Family::PowerVolGarch: return raw;
    }
    return raw;
}

std::vector<int> lag_range(int from, int to) {
    std::vector<int> v;
    for (int k = from; k <= to; ++k) v.push_back(k);
    return v;
}

const std::vector<int>& IndexSets::lags(Family f, int i, int j) const {
    static const std::vector<int> kEmpty;
    const auto it = families.find(f);
    if (it == families.end()) return kEmpty;
    return i == j ? it->second.own : it->second.cross;
}

bool IndexSets::time_varying(Family f, int i, int j, int k) const {
    const auto it = families.find(f);
    if (it == families.end()) return false;
    return contains(i == j ? it->second.own_tv : it->second.cross_tv, k);
}

bool IndexSets::thresholded(Family f, int k) const {
    if (!is_threshold_family(f)) return false;
    const auto it = families.find(f);
    return it != families.end() && contains(it->second.threshold, k);
}

int IndexSets::max_lag() const {
    int m = 0;
    for (const auto& [f, l] : families) {
        for (int k : l.own) m = std::max(m, k);
        for (int k : l.cross) m = std::max(m, k);
    }
    return m;
}

void IndexSets::validate() const {
    for (const auto& [f, l] : families) {
        if (f == Family::Intercept) throw ParameterError("intercept takes no lag set");
        for (const auto* v : {&l.own, &l.cross}) {
            if (!std::is_sorted(v->begin(), v->end()) ||
                std::adjacent_find(v->begin(), v->end()) != v->end()) {
                throw ParameterError(std::string("lags of ") + to_string(f) +
                                     " must be sorted and unique");
            }
            for (int k : *v) {
                if (k < 0) throw ParameterError(std::string("negative lag in ") + to_string(f));
                if (k == 0 && !allows_lag_zero(f)) {
                    throw ParameterError(std::string("lag 0 not allowed for ") + to_string(f));
                }
            }
        }
        if (!l.threshold.empty() && !is_threshold_family(f)) {
            throw ParameterError(std::string("thresholds not allowed for ") + to_string(f));
        }
    }
}

IndexSets IndexSets::full() {
    auto long_set = [](int from) {
        auto v = lag_range(from, 40);
        auto tail = lag_range(140, 150);
        v.insert(v.end(), tail.begin(), tail.end());
        return v;
    };
    const std::vector<int> tv12{1, 2};
    const std::vector<int> tv012{0, 1, 2};
    IndexSets s;
    s.families[Family::SpeedAR] = {long_set(1), lag_range(1, 6), tv12, tv12, tv12};
    s.families[Family::SpeedMA] = {lag_range(1, 6), lag_range(1, 6), tv12, {}, {}};
    s.families[Family::SpeedVolShock] = {long_set(1), lag_range(1, 6), tv12, tv12, {}};
    s.families[Family::SpeedVolGarch] = {lag_range(1, 6), lag_range(1, 6), tv12, tv12, {}};
    s.families[Family::PowerAR] = {long_set(1), lag_range(1, 6), tv12, tv12, tv12};
    s.families[Family::PowerSpeed] = {long_set(0), lag_range(0, 6), tv012, tv012, tv012};
    s.families[Family::PowerMA] = {lag_range(1, 6), lag_range(1, 6), tv12, tv12, {}};
    s.families[Family::PowerSpeedMA] = {lag_range(0, 6), lag_range(0, 6), tv012, tv012, {}};
    s.families[Family::PowerVolShock] = {long_set(1), lag_range(1, 6), tv12, tv12, {}};
    s.families[Family::PowerVolGarch] = {lag_range(1, 6), lag_range(1, 6), tv12, tv12, {}};
    s.families[Family::PowerVolSpeedShock] = {long_set(1), lag_range(1, 6), tv12, tv12, {}};
    s.families[Family::PowerVolSpeedGarch] = {lag_range(1, 6), lag_range(1, 6), tv12, tv12, {}};
    return s;
}

IndexSets IndexSets::compact() {
    IndexSets s;
    s.families[Family::SpeedAR] = {lag_range(1, 3), {1}, {}, {}, {1}};
    s.families[Family::SpeedMA] = {{1}, {}, {}, {}, {}};
    s.families[Family::SpeedVolShock] = {lag_range(1, 2), {1}, {}, {}, {}};
    s.families[Family::SpeedVolGarch] = {{1}, {}, {}, {}, {}};
    s.families[Family::PowerAR] = {lag_range(1, 2), {}, {}, {}, {}};
    s.families[Family::PowerSpeed] = {lag_range(0, 1), {0}, {}, {}, {0}};
    s.families[Family::PowerMA] = {{1}, {}, {}, {}, {}};
    s.families[Family::PowerSpeedMA] = {{0}, {}, {}, {}, {}};
    s.families[Family::PowerVolShock] = {{1}, {}, {}, {}, {}};
    s.families[Family::PowerVolGarch] = {{1}, {}, {}, {}, {}};
    s.families[Family::PowerVolSpeedShock] = {{1}, {}, {}, {}, {}};
    s.families[Family::PowerVolSpeedGarch] = {{1}, {}, {}, {}, {}};
    return s;
}

std::vector<double> compute_thresholds(std::span<const double> series, bool* constant) {
    if (series.size() < 10) throw ParameterError("thresholds need at least 10 observations");
    std::vector<double> x(series.begin(), series.end());
    std::sort(x.begin(), x.end());
    const double n1 = static_cast<double>(x.size() - 1);
    std::vector<double> q;
    for (int p = 1; p <= 9; ++p) {
        const double h = n1 * (p / 10.0);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, x.size() - 1);
        q.push_back(x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]));
    }
    q.erase(std::unique(q.begin(), q.end()), q.end());
    if (constant) *constant = x.front() == x.back();
    return q;
}

std::vector<double> ThresholdSet::for_term(Family f, int j, int k, const IndexSets& sets) const {
    std::vector<double> c{kNoThreshold};
    if (!sets.thresholded(f, k)) return c;
    const auto& src = (f == Family::PowerAR) ? power : speed;
    const auto& v = src.at(static_cast<std::size_t>(j));
    c.insert(c.end(), v.begin(), v.end());
    return c;
}

ThresholdSet make_thresholds(const data::TurbinePanel& panel, const ThresholdPolicy& policy) {
    ThresholdSet set;
    const std::size_t d = panel.turbines();
    set.speed.resize(d);
    set.power.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        switch (policy.kind) {
            case ThresholdPolicy::Kind::None: break;
            case ThresholdPolicy::Kind::Fixed:
                set.speed[i] = policy.speed_fixed;
                set.power[i] = policy.power_fixed;
                std::sort(set.speed[i].begin(), set.speed[i].end());
                std::sort(set.power[i].begin(), set.power[i].end());
                break;
            case ThresholdPolicy::Kind::Deciles: {
                const Eigen::VectorXd s = panel.speed.col(c);
                const Eigen::VectorXd p = panel.power.col(c);
                set.speed[i] = compute_thresholds({s.data(), static_cast<std::size_t>(s.size())});
                set.power[i] = compute_thresholds({p.data(), static_cast<std::size_t>(p.size())});
                break;
            }
        }
    }
    return set;
}

Tracks Tracks::from_panel(const data::TurbinePanel& panel, const Eigen::MatrixXd* speed_residual,
                          const Eigen::MatrixXd* power_residual, const Eigen::MatrixXd* speed_vol,
                          const Eigen::MatrixXd* power_vol_cbrt) {
    Tracks tr;
    const auto n = static_cast<Eigen::Index>(panel.rows());
    const auto d = static_cast<Eigen::Index>(panel.turbines());
    tr.series[static_cast<std::size_t>(Series::Speed)] = panel.speed;
    tr.series[static_cast<std::size_t>(Series::Power)] = panel.power;
    auto assign = [&](Series s, const Eigen::MatrixXd* m) {
        auto& dst = tr.series[static_cast<std::size_t>(s)];
        if (m) {
            if (m->rows() != n || m->cols() != d) {
                throw ParameterError("proxy matrix shape does not match the panel");
            }
            dst = *m;
        } else {
            dst = Eigen::MatrixXd::Ones(n, d);
        }
    };
    assign(Series::SpeedResidual, speed_residual);
    assign(Series::PowerResidual, power_residual);
    assign(Series::SpeedVol, speed_vol);
    assign(Series::PowerVolCbrt, power_vol_cbrt);
    return tr;
}

BasisPair BasisPair::evaluate(std::span<const std::int64_t> timestamps,
                              const basis::BSplineSpec& diurnal, const basis::BSplineSpec& annual) {
    BasisPair bp;
    bp.diurnal = diurnal;
    bp.annual = annual;
    bp.cumulative = basis::interaction_basis(timestamps, diurnal, annual, basis::BasisKind::Cumulative);
    bp.plain = basis::interaction_basis(timestamps, diurnal, annual, basis::BasisKind::Plain);
    return bp;
}

int BasisPair::constant_column(basis::BasisKind kind) const {
    return basis::constant_column(kind, diurnal, annual);
}

double column_value(const ColumnSpec& c, const Tracks& tracks, std::int64_t t,
                    std::span<const double> cumulative_row, std::span<const double> plain_row) {
    const double reg = c.family == Family::Intercept
                           ? 1.0
                           : transform(c, tracks.at(source_series(c.family), c.source, t - c.lag));
    if (c.basis < 0) return reg;
    const auto& row = basis_kind(c.equation) == basis::BasisKind::Cumulative ? cumulative_row : plain_row;
    return reg * row[static_cast<std::size_t>(c.basis)];
}

namespace {

std::vector<Sign> signs_for(Family f) {
    if (is_shock_family(f)) return {Sign::Plus, Sign::Minus};
    return {Sign::None};
}

template <typename Emit>
void enumerate_columns(Equation e, int i, int d, const IndexSets& sets, const ThresholdSet& thresholds,
                       int n_basis, Emit&& emit) {
    const bool intercept_tv =
        basis_kind(e) == basis::BasisKind::Cumulative ? sets.mean_intercept_tv : sets.vol_intercept_tv;
    ColumnSpec ic;
    ic.equation = e;
    ic.family = Family::Intercept;
    if (intercept_tv) {
        for (int b = 0; b < n_basis; ++b) {
            ic.basis = b;
            emit(ic, true);
        }
    } else {
        emit(ic, true);
    }
    for (Family f : families_of(e)) {
        for (int j = 0; j < d; ++j) {
            for (int k : sets.lags(f, i, j)) {
                const bool tv = sets.time_varying(f, i, j, k);
                for (double c : thresholds.for_term(f, j, k, sets)) {
                    for (Sign s : signs_for(f)) {
                        ColumnSpec spec{e, f, j, k, c, s, -1};
                        if (tv) {
                            for (int b = 0; b < n_basis; ++b) {
                                spec.basis = b;
                                emit(spec, b == 0);
                            }
                        } else {
                            emit(spec, true);
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

std::size_t expected_columns(Equation e, int i, int d, const IndexSets& sets,
                             const ThresholdSet& thresholds, const BasisPair& basis) {
    std::size_t count = 0;
    enumerate_columns(e, i, d, sets, thresholds, static_cast<int>(basis.cumulative.size()),
                      [&](const ColumnSpec&, bool) { ++count; });
    return count;
}

DesignMatrix build_design(Equation e, int i, const Tracks& tracks, const IndexSets& sets,
                          const ThresholdSet& thresholds, const BasisPair& basis,
                          std::size_t row_begin, std::size_t row_end) {
    const int max_lag = sets.max_lag();
    if (row_begin < static_cast<std::size_t>(max_lag) + static_cast<std::size_t>(tracks.base)) {
        throw ParameterError("insufficient history: maximum lag " + std::to_string(max_lag) +
                             " needs the design to start at row >= " + std::to_string(max_lag) +
                             " (panel needs n > " + std::to_string(max_lag) + " rows)");
    }
    if (row_end <= row_begin || static_cast<std::int64_t>(row_end) > tracks.end()) {
        throw ParameterError("insufficient history: panel needs n > " + std::to_string(max_lag) +
                             " rows for maximum lag " + std::to_string(max_lag));
    }
    const int d = static_cast<int>(tracks.turbines());
    const auto m = static_cast<Eigen::Index>(row_end - row_begin);
    const auto kind = basis_kind(e);
    const basis::BasisSet& bset = kind == basis::BasisKind::Cumulative ? basis.cumulative : basis.plain;
    if (bset.values.rows() < static_cast<Eigen::Index>(row_end)) {
        throw ParameterError("basis matrix shorter than the design range");
    }

    std::vector<ColumnSpec> specs;
    enumerate_columns(e, i, d, sets, thresholds, static_cast<int>(bset.size()),
                      [&](const ColumnSpec& c, bool) { specs.push_back(c); });

    DesignMatrix dm;
    dm.row_offset = row_begin;
    dm.columns = specs;
    dm.values.resize(m, static_cast<Eigen::Index>(specs.size()));
    Eigen::VectorXd reg(m);
    for (std::size_t col = 0; col < specs.size(); ++col) {
        const ColumnSpec& c = specs[col];
        // The regressor is shared by the consecutive basis columns of one term.
        if (col == 0 || c.basis <= 0 || !(specs[col - 1].family == c.family &&
                                          specs[col - 1].source == c.source &&
                                          specs[col - 1].lag == c.lag &&
                                          specs[col - 1].threshold == c.threshold &&
                                          specs[col - 1].sign == c.sign)) {
            if (c.family == Family::Intercept) {
                reg.setOnes();
            } else {
                const Series s = source_series(c.family);
                for (Eigen::Index r = 0; r < m; ++r) {
                    const auto t = static_cast<std::int64_t>(row_begin) + r;
                    reg(r) = transform(c, tracks.at(s, c.source, t - c.lag));
                }
            }
        }
        auto dst = dm.values.col(static_cast<Eigen::Index>(col));
        if (c.basis < 0) {
            dst = reg;
        } else {
            dst = reg.cwiseProduct(
                bset.values.col(c.basis).segment(static_cast<Eigen::Index>(row_begin), m));
        }
    }
    return dm;
}

Eigen::VectorXd equation_response(Equation e, int i, const Tracks& tracks, std::size_t row_begin,
                                  std::size_t row_end) {
    const auto m = static_cast<Eigen::Index>(row_end - row_begin);
    Eigen::VectorXd y(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto t = static_cast<std::int64_t>(row_begin) + r;
        switch (e) {
            case Equation::SpeedMean: y(r) = tracks.at(Series::Speed, i, t); break;
            case Equation::PowerMean: y(r) = tracks.at(Series::Power, i, t); break;
            case Equation::SpeedVol: y(r) = std::abs(tracks.at(Series::SpeedResidual, i, t)); break;
            case Equation::PowerVol:
                y(r) = std::cbrt(std::abs(tracks.at(Series::PowerResidual, i, t)));
                break;
        }
    }
    return y;
}

std::vector<std::size_t> DesignMatrix::deduplicate() {
    const Eigen::Index m = values.rows();
    std::unordered_map<std::uint64_t, std::vector<Eigen::Index>> seen;
    std::vector<std::size_t> removed;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        const auto col = values.col(c);
        if ((col.array() == 0.0).all()) {
            removed.push_back(static_cast<std::size_t>(c));
            continue;
        }
        std::uint64_t h = 1469598103934665603ULL;
        for (Eigen::Index r = 0; r < m; ++r) {
            double v = col(r);
            if (v == 0.0) v = 0.0;  // fold -0
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            h = (h ^ bits) * 1099511628211ULL;
        }
        auto& bucket = seen[h];
        bool dup = false;
        for (Eigen::Index prev : bucket) {
            if ((values.col(prev).array() == col.array()).all()) {
                dup = true;
                break;
            }
        }
        if (dup) {
            removed.push_back(static_cast<std::size_t>(c));
            continue;
        }
        bucket.push_back(c);
        keep.push_back(c);
    }
    if (removed.empty()) return removed;
    Eigen::MatrixXd kept(m, static_cast<Eigen::Index>(keep.size()));
    std::vector<ColumnSpec> cols;
    cols.reserve(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        kept.col(static_cast<Eigen::Index>(k)) = values.col(keep[k]);
        cols.push_back(columns[static_cast<std::size_t>(keep[k])]);
    }
    values = std::move(kept);
    columns = std::move(cols);
    return removed;
}

std::vector<bool> DesignMatrix::penalize_mask(const BasisPair& basis) const {
    std::vector<bool> mask(columns.size(), true);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& spec = columns[c];
        if (spec.family != Family::Intercept) continue;
        if (spec.basis < 0 || spec.basis == basis.constant_column(basis_kind(spec.equation))) {
            mask[c] = false;
        }
    }
    return mask;
}

namespace {

std::size_t first_row(const IndexSets& sets) { return static_cast<std::size_t>(sets.max_lag()); }

}  // namespace

DesignMatrix build_speed_mean_design(const data::TurbinePanel& panel,
                                     const Eigen::MatrixXd& speed_residual_proxy, int i,
                                     const IndexSets& sets, const ThresholdSet& thresholds,
                                     const BasisPair& basis) {
    const Tracks tr = Tracks::from_panel(panel, &speed_residual_proxy);
    return build_design(Equation::SpeedMean, i, tr, sets, thresholds, basis, first_row(sets),
                        panel.rows());
}

DesignMatrix build_power_mean_design(const data::TurbinePanel& panel,
                                     const Eigen::MatrixXd& power_residual_proxy,
                                     const Eigen::MatrixXd& speed_residual_proxy, int i,
                                     const IndexSets& sets, const ThresholdSet& thresholds,
                                     const BasisPair& basis) {
    const Tracks tr = Tracks::from_panel(panel, &speed_residual_proxy, &power_residual_proxy);
    return build_design(Equation::PowerMean, i, tr, sets, thresholds, basis, first_row(sets),
                        panel.rows());
}

DesignMatrix build_speed_vol_design(const data::TurbinePanel& panel,
                                    const Eigen::MatrixXd& speed_residuals,
                                    const Eigen::MatrixXd& speed_vol_proxy, int i,
                                    const IndexSets& sets, const BasisPair& basis) {
    const Tracks tr = Tracks::from_panel(panel, &speed_residuals, nullptr, &speed_vol_proxy);
    return build_design(Equation::SpeedVol, i, tr, sets, ThresholdSet{}, basis, first_row(sets),
                        panel.rows());
}

DesignMatrix build_power_vol_design(const data::TurbinePanel& panel,
                                    const Eigen::MatrixXd& power_residuals,
                                    const Eigen::MatrixXd& power_vol_cbrt_proxy,
                                    const Eigen::MatrixXd& speed_residuals,
                                    const Eigen::MatrixXd& speed_vol_proxy, int i,
                                    const IndexSets& sets, const BasisPair& basis) {
    const Tracks tr = Tracks::from_panel(panel, &speed_residuals, &power_residuals, &speed_vol_proxy,
                                         &power_vol_cbrt_proxy);
    return build_design(Equation::PowerVol, i, tr, sets, ThresholdSet{}, basis, first_row(sets),
                        panel.rows());
}

void write_design_metadata_csv(const std::string& path, const DesignMatrix& design, int turbine) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write '" + path + "'");
    out << "equation,family,i,j,lag,threshold,basis,tv\n";
    for (const auto& c : design.columns) {
        out << to_string(c.equation) << ',' << to_string(c.family) << to_string(c.sign) << ',' << turbine << ','
            << c.source << ',' << c.lag << ',' << text::format_double(c.threshold) << ',' << c.basis
            << ',' << (c.time_varying() ? 1 : 0) << '\n';
    }
}

}  // namespace wpf::features
