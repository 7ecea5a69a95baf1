#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace wpf::basis {

/// Equidistant periodic B-spline family: N basis functions of odd degree H
/// over a season of S time steps, knot spacing h = S / N.
struct BSplineSpec {
    int degree = 3;
    double season_length = 144.0;
    int n_basis = 12;

    [[nodiscard]] double spacing() const { return season_length / n_basis; }

    /// Throws ParameterError. With `strict_partition` the spacing must be at
    /// least H + 1 time steps.
    void validate(bool strict_partition = false) const;

    static BSplineSpec diurnal();  // S = 144, N = 12, H = 3
    static BSplineSpec annual();   // S = 52594.56, N = 4, H = 3
};

/// B-spline of degree `degree` on `degree + 2` strictly increasing knots,
/// evaluated by the Cox-de Boor recurrence. Support [k_0, k_{H+1}).
double bspline_eval(double t, std::span<const double> knots, int degree);

/// j-th periodic basis function (1-based): the initial spline, centered at 0,
/// shifted by (j - 1) h and wrapped with period S.
double periodic_basis(double t, const BSplineSpec& spec, int j);

enum class BasisKind { Plain, Cumulative };

/// Evaluated basis columns over a sequence of time points. For interaction
/// sets `pairs[c]` holds the 1-based (annual, diurnal) indices of column c.
struct BasisSet {
    BasisKind kind = BasisKind::Plain;
    Eigen::MatrixXd values;
    std::vector<std::pair<int, int>> pairs;

    [[nodiscard]] Eigen::Index size() const { return values.cols(); }
};

/// All N periodic basis functions at the given points.
BasisSet periodic_basis_matrix(std::span<const double> t, const BSplineSpec& spec);

/// Running sums of the periodic basis within the index: column l holds
/// B*_1 + ... + B*_l. The last column is the partition constant 1.
BasisSet cumulative_basis(std::span<const double> t, const BSplineSpec& spec);

/// Index of the interaction column for 1-based (annual l1, diurnal l2).
inline int interaction_index(int l1, int l2, int n_diurnal) { return (l1 - 1) * n_diurnal + (l2 - 1); }

/// One row of the annual x diurnal interaction set. Plain kind replaces the
/// (1,1) product with the constant 1; cumulative kind ends in the constant 1.
void interaction_row(double time_of_day, double time_of_year, const BSplineSpec& diurnal,
                     const BSplineSpec& annual, BasisKind kind, std::span<double> out);

/// Interaction set over epoch timestamps (calendar positions from UTC).
BasisSet interaction_basis(std::span<const std::int64_t> timestamps, const BSplineSpec& diurnal,
                           const BSplineSpec& annual, BasisKind kind);

/// Column of the interaction set that is identically 1.
int constant_column(BasisKind kind, const BSplineSpec& diurnal, const BSplineSpec& annual);

}  // namespace wpf::basis
