#pragma once

#include "wpf/basis.hpp"
#include "wpf/panel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wpf::features {

inline constexpr double kNoThreshold = -std::numeric_limits<double>::infinity();

/// The four regressions of the joint model.
enum class Equation : std::uint8_t { SpeedMean, PowerMean, SpeedVol, PowerVol };

/// Coefficient families. Comments give the regressor for source turbine j, lag k.
enum class Family : std::uint8_t {
    Intercept,           // 1 (times basis)
    SpeedAR,             // max{W_{j,t-k}, c}
    SpeedMA,             // eps_{j,t-k}
    PowerAR,             // max{P_{j,t-k}, c}
    PowerSpeed,          // max{W_{j,t-k}, c}, k >= 0
    PowerMA,             // epsP_{j,t-k}
    PowerSpeedMA,        // eps_{j,t-k}, k >= 0
    SpeedVolShock,       // eps^{+/-}_{j,t-k}
    SpeedVolGarch,       // sigma_{j,t-k}
    PowerVolShock,       // |epsP^{+/-}_{j,t-k}|^{1/3}
    PowerVolGarch,       // varsigma^{1/3}_{j,t-k}
    PowerVolSpeedShock,  // |eps^{+/-}_{j,t-k}|^{1/3}
    PowerVolSpeedGarch,  // sigma^{1/3}_{j,t-k}
};

enum class Sign : std::uint8_t { None, Plus, Minus };

/// Per-turbine series the regressors read from.
enum class Series : std::uint8_t {
    Speed,
    Power,
    SpeedResidual,
    PowerResidual,
    SpeedVol,      // sigma proxy
    PowerVolCbrt,  // varsigma^{1/3} proxy
};
inline constexpr std::size_t kSeriesCount = 6;

const char* to_string(Equation e);
const char* to_string(Family f);
const char* to_string(Sign s);
Equation equation_from_string(const std::string& s);
Family family_from_string(const std::string& s);
Sign sign_from_string(const std::string& s);

/// Families that may appear in an equation (intercept excluded).
std::vector<Family> families_of(Equation e);
Equation equation_of(Family f);  // Intercept -> throws
Series source_series(Family f);
bool is_shock_family(Family f);  // split into +/- regressors
bool allows_lag_zero(Family f);
bool is_threshold_family(Family f);
/// Mean equations expand time-varying terms against the cumulative set,
/// volatility equations against the plain set.
basis::BasisKind basis_kind(Equation e);

/// Metadata tying one design column to one coefficient instance.
struct ColumnSpec {
    Equation equation = Equation::SpeedMean;
    Family family = Family::Intercept;
    int source = -1;  // turbine j; -1 for the intercept
    int lag = 0;
    double threshold = kNoThreshold;
    Sign sign = Sign::None;
    int basis = -1;  // interaction-set column, -1 for a constant coefficient

    [[nodiscard]] bool time_varying() const { return basis >= 0; }
    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

std::string describe(const ColumnSpec& c);

/// max{x, c}; c = -inf returns x.
inline double threshold_regressor(double x, double c) { return x > c ? x : c; }

/// Regressor value from the raw source-series value (threshold, sign split,
/// cube root as the family prescribes). Basis factor not included.
double transform(const ColumnSpec& c, double raw);

/// Lag rules for one family: own lags (j = i) and cross lags (j != i), the
/// lags whose coefficients vary in time, and lags carrying thresholds.
struct FamilyLags {
    std::vector<int> own;
    std::vector<int> cross;
    std::vector<int> own_tv;
    std::vector<int> cross_tv;
    std::vector<int> threshold;
};

struct IndexSets {
    std::map<Family, FamilyLags> families;
    bool mean_intercept_tv = true;
    bool vol_intercept_tv = true;

    [[nodiscard]] const std::vector<int>& lags(Family f, int i, int j) const;
    [[nodiscard]] bool time_varying(Family f, int i, int j, int k) const;
    [[nodiscard]] bool thresholded(Family f, int k) const;
    [[nodiscard]] int max_lag() const;
    /// Lags sorted, nonnegative, lag 0 only where allowed. Throws ParameterError.
    void validate() const;

    /// Default long lag sets: own lags
    /// 1..40 and 140..150, short sets 1..6, contemporaneous speed terms
    /// from 0; lags 1-2 (0-2 for speed-in-power terms) time varying and
    /// thresholded.
    static IndexSets full();
    /// Short lag sets with constant coefficients and calendar-varying
    /// intercepts; fits in seconds on desk-scale synthetic panels.
    static IndexSets compact();
};

std::vector<int> lag_range(int from, int to);

/// Type-7 empirical deciles (probabilities 0.1..0.9), ascending and
/// deduplicated. `constant` is set when the series has a single value.
std::vector<double> compute_thresholds(std::span<const double> series, bool* constant = nullptr);

struct ThresholdPolicy {
    enum class Kind { Deciles, Fixed, None };
    Kind kind = Kind::Deciles;
    std::vector<double> speed_fixed;  // Kind::Fixed
    std::vector<double> power_fixed;
};

/// Threshold values per source series (without the -inf baseline).
struct ThresholdSet {
    std::vector<std::vector<double>> speed;  // per turbine
    std::vector<std::vector<double>> power;  // per turbine

    /// {-inf} followed by the family's source-series thresholds when k is a
    /// thresholded lag of the family.
    [[nodiscard]] std::vector<double> for_term(Family f, int j, int k, const IndexSets& sets) const;
};

ThresholdSet make_thresholds(const data::TurbinePanel& panel, const ThresholdPolicy& policy);

/// Per-turbine series on an absolute time axis starting at `base`.
struct Tracks {
    std::int64_t base = 0;
    std::array<Eigen::MatrixXd, kSeriesCount> series;  // rows = time, cols = turbine

    [[nodiscard]] double at(Series s, int j, std::int64_t t) const {
        return series[static_cast<std::size_t>(s)](t - base, j);
    }
    double& at(Series s, int j, std::int64_t t) { return series[static_cast<std::size_t>(s)](t - base, j); }
    [[nodiscard]] std::int64_t end() const { return base + series[0].rows(); }
    [[nodiscard]] Eigen::Index turbines() const { return series[0].cols(); }

    /// Panel values plus residual/volatility proxies (all-ones when not given).
    static Tracks from_panel(const data::TurbinePanel& panel,
                             const Eigen::MatrixXd* speed_residual = nullptr,
                             const Eigen::MatrixXd* power_residual = nullptr,
                             const Eigen::MatrixXd* speed_vol = nullptr,
                             const Eigen::MatrixXd* power_vol_cbrt = nullptr);
};

/// Interaction basis sets evaluated over the panel timestamps.
struct BasisPair {
    basis::BSplineSpec diurnal = basis::BSplineSpec::diurnal();
    basis::BSplineSpec annual = basis::BSplineSpec::annual();
    basis::BasisSet cumulative;
    basis::BasisSet plain;

    static BasisPair evaluate(std::span<const std::int64_t> timestamps,
                              const basis::BSplineSpec& diurnal, const basis::BSplineSpec& annual);
    [[nodiscard]] int constant_column(basis::BasisKind kind) const;
};

/// Value of one column at absolute time t, given the interaction rows at t.
double column_value(const ColumnSpec& c, const Tracks& tracks, std::int64_t t,
                    std::span<const double> cumulative_row, std::span<const double> plain_row);

struct DesignMatrix {
    Eigen::MatrixXd values;           // rows = effective sample
    std::vector<ColumnSpec> columns;  // one per column of `values`
    std::size_t row_offset = 0;       // absolute index of the first row

    [[nodiscard]] Eigen::Index rows() const { return values.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return values.cols(); }

    /// Drops all-zero columns and exact duplicates of earlier columns.
    /// Returns the original indices that were removed.
    std::vector<std::size_t> deduplicate();

    /// False only for the constant intercept column.
    [[nodiscard]] std::vector<bool> penalize_mask(const BasisPair& basis) const;
};

/// Number of columns the builder will emit before deduplication.
std::size_t expected_columns(Equation e, int i, int d, const IndexSets& sets,
                             const ThresholdSet& thresholds, const BasisPair& basis);

/// Generic builder over absolute rows [row_begin, row_end). Throws
/// ParameterError when row_begin is below the maximum lag.
DesignMatrix build_design(Equation e, int i, const Tracks& tracks, const IndexSets& sets,
                          const ThresholdSet& thresholds, const BasisPair& basis,
                          std::size_t row_begin, std::size_t row_end);

/// Response of an equation: W_i, P_i, |eps_i|, |epsP_i|^{1/3}.
Eigen::VectorXd equation_response(Equation e, int i, const Tracks& tracks, std::size_t row_begin,
                                  std::size_t row_end);

/// Effective-sample builders over rows [max lag, n).
DesignMatrix build_speed_mean_design(const data::TurbinePanel& panel,
                                     const Eigen::MatrixXd& speed_residual_proxy, int i,
                                     const IndexSets& sets, const ThresholdSet& thresholds,
                                     const BasisPair& basis);
DesignMatrix build_power_mean_design(const data::TurbinePanel& panel,
                                     const Eigen::MatrixXd& power_residual_proxy,
                                     const Eigen::MatrixXd& speed_residual_proxy, int i,
                                     const IndexSets& sets, const ThresholdSet& thresholds,
                                     const BasisPair& basis);
DesignMatrix build_speed_vol_design(const data::TurbinePanel& panel,
                                    const Eigen::MatrixXd& speed_residuals,
                                    const Eigen::MatrixXd& speed_vol_proxy, int i,
                                    const IndexSets& sets, const BasisPair& basis);
DesignMatrix build_power_vol_design(const data::TurbinePanel& panel,
                                    const Eigen::MatrixXd& power_residuals,
                                    const Eigen::MatrixXd& power_vol_cbrt_proxy,
                                    const Eigen::MatrixXd& speed_residuals,
                                    const Eigen::MatrixXd& speed_vol_proxy, int i,
                                    const IndexSets& sets, const BasisPair& basis);

/// One row per column: equation, family (with shock sign), i, j, lag,
/// threshold, basis, tv flag.
void write_design_metadata_csv(const std::string& path, const DesignMatrix& design, int turbine);

}  // namespace wpf::features
