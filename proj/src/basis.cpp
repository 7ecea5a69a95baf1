#include "wpf/basis.hpp"

#include "wpf/calendar.hpp"
#include "wpf/error.hpp"

#include <array>
#include <cmath>
#include <string>

namespace wpf::basis {

void BSplineSpec::validate(bool strict_partition) const {
    if (degree < 1 || degree % 2 == 0) {
        throw ParameterError("B-spline degree must be odd, got " + std::to_string(degree));
    }
    if (n_basis < 1) throw ParameterError("B-spline basis count must be >= 1");
    if (!(season_length > 0.0) || !std::isfinite(season_length)) {
        throw ParameterError("season length must be positive");
    }
    if (strict_partition && spacing() < degree + 1) {
        throw ParameterError("knot spacing " + std::to_string(spacing()) +
                             " below H + 1 breaks the partition of unity");
    }
}

BSplineSpec BSplineSpec::diurnal() { return {3, calendar::kDiurnalSteps, 12}; }
BSplineSpec BSplineSpec::annual() { return {3, calendar::kAnnualSteps, 4}; }

double bspline_eval(double t, std::span<const double> knots, int degree) {
    if (degree < 0) throw ParameterError("negative B-spline degree");
    const auto h = static_cast<std::size_t>(degree);
    if (knots.size() != h + 2) {
        throw ParameterError("B-spline of degree " + std::to_string(degree) + " needs " +
                             std::to_string(h + 2) + " knots");
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1])) throw ParameterError("B-spline knots must be strictly increasing");
    }
    if (t < knots.front() || t >= knots.back()) return 0.0;

    std::array<double, 16> small{};
    std::vector<double> large;
    double* n = small.data();
    if (h + 1 > small.size()) {
        large.assign(h + 1, 0.0);
        n = large.data();
    }
    for (std::size_t i = 0; i <= h; ++i) n[i] = (knots[i] <= t && t < knots[i + 1]) ? 1.0 : 0.0;
    for (std::size_t r = 1; r <= h; ++r) {
        for (std::size_t i = 0; i + r <= h; ++i) {
            const double left = (t - knots[i]) / (knots[i + r] - knots[i]);
            const double right = (knots[i + r + 1] - t) / (knots[i + r + 1] - knots[i + 1]);
            n[i] = left * n[i] + right * n[i + 1];
        }
    }
    return n[0];
}

double periodic_basis(double t, const BSplineSpec& spec, int j) {
    if (j < 1 || j > spec.n_basis) {
        throw IndexError("basis index " + std::to_string(j) + " outside 1.." +
                         std::to_string(spec.n_basis));
    }
    const double S = spec.season_length;
    const double h = spec.spacing();
    const int H = spec.degree;
    std::array<double, 16> knots{};
    std::vector<double> big;
    double* k = knots.data();
    if (static_cast<std::size_t>(H) + 2 > knots.size()) {
        big.resize(static_cast<std::size_t>(H) + 2);
        k = big.data();
    }
    const double half = h * (H + 1) / 2.0;
    for (int m = 0; m <= H + 1; ++m) k[m] = -half + m * h;

    double u = std::fmod(t - (j - 1) * h, S);
    if (u < 0.0) u += S;
    if (u >= S) u -= S;
    // Shifts u - q S that land in the support [-half, half).
    const auto q_lo = static_cast<long>(std::ceil((u - half) / S - 1e-12)) - 1;
    const auto q_hi = static_cast<long>(std::floor((u + half) / S + 1e-12)) + 1;
    const std::span<const double> ks(k, static_cast<std::size_t>(H) + 2);
    double sum = 0.0;
    for (long q = q_lo; q <= q_hi; ++q) {
        const double x = u - static_cast<double>(q) * S;
        if (x >= -half && x < half) sum += bspline_eval(x, ks, H);
    }
    return sum;
}

BasisSet periodic_basis_matrix(std::span<const double> t, const BSplineSpec& spec) {
    spec.validate();
    BasisSet set;
    set.kind = BasisKind::Plain;
    set.values.resize(static_cast<Eigen::Index>(t.size()), spec.n_basis);
    for (std::size_t r = 0; r < t.size(); ++r) {
        for (int j = 1; j <= spec.n_basis; ++j) {
            set.values(static_cast<Eigen::Index>(r), j - 1) = periodic_basis(t[r], spec, j);
        }
    }
    return set;
}

BasisSet cumulative_basis(std::span<const double> t, const BSplineSpec& spec) {
    BasisSet set = periodic_basis_matrix(t, spec);
    set.kind = BasisKind::Cumulative;
    for (Eigen::Index l = 1; l < set.values.cols(); ++l) {
        set.values.col(l) += set.values.col(l - 1);
    }
    set.values.col(set.values.cols() - 1).setOnes();
    return set;
}

namespace {

void single_row(double t, const BSplineSpec& spec, BasisKind kind, double* out) {
    for (int j = 1; j <= spec.n_basis; ++j) out[j - 1] = periodic_basis(t, spec, j);
    if (kind == BasisKind::Cumulative) {
        for (int j = 1; j < spec.n_basis; ++j) out[j] += out[j - 1];
        out[spec.n_basis - 1] = 1.0;
    }
}

}  // namespace

void interaction_row(double time_of_day, double time_of_year, const BSplineSpec& diurnal,
                     const BSplineSpec& annual, BasisKind kind, std::span<double> out) {
    const auto nd = static_cast<std::size_t>(diurnal.n_basis);
    const auto na = static_cast<std::size_t>(annual.n_basis);
    if (out.size() != nd * na) throw ParameterError("interaction row buffer has wrong size");
    std::array<double, 64> dbuf{}, abuf{};
    std::vector<double> dv, av;
    double* dp = dbuf.data();
    double* ap = abuf.data();
    if (nd > dbuf.size()) {
        dv.resize(nd);
        dp = dv.data();
    }
    if (na > abuf.size()) {
        av.resize(na);
        ap = av.data();
    }
    single_row(time_of_day, diurnal, kind, dp);
    single_row(time_of_year, annual, kind, ap);
    for (std::size_t l1 = 0; l1 < na; ++l1) {
        for (std::size_t l2 = 0; l2 < nd; ++l2) out[l1 * nd + l2] = ap[l1] * dp[l2];
    }
    if (kind == BasisKind::Plain) out[0] = 1.0;
}

BasisSet interaction_basis(std::span<const std::int64_t> timestamps, const BSplineSpec& diurnal,
                           const BSplineSpec& annual, BasisKind kind) {
    diurnal.validate(true);
    annual.validate();
    const int nd = diurnal.n_basis;
    const int na = annual.n_basis;
    BasisSet set;
    set.kind = kind;
    set.values.resize(static_cast<Eigen::Index>(timestamps.size()), nd * na);
    for (int l1 = 1; l1 <= na; ++l1) {
        for (int l2 = 1; l2 <= nd; ++l2) set.pairs.emplace_back(l1, l2);
    }
    std::vector<double> row(static_cast<std::size_t>(nd * na));
    for (std::size_t r = 0; r < timestamps.size(); ++r) {
        interaction_row(calendar::time_of_day(timestamps[r]), calendar::time_of_year(timestamps[r]),
                        diurnal, annual, kind, row);
        for (std::size_t c = 0; c < row.size(); ++c) {
            set.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    return set;
}

int constant_column(BasisKind kind, const BSplineSpec& diurnal, const BSplineSpec& annual) {
    return kind == BasisKind::Plain ? 0 : diurnal.n_basis * annual.n_basis - 1;
}

}  // namespace wpf::basis
