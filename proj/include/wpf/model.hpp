#pragma once

#include "wpf/basis.hpp"
#include "wpf/error.hpp"
#include "wpf/features.hpp"
#include "wpf/lasso.hpp"
#include "wpf/panel.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace wpf::model {

struct ModelConfig {
    features::IndexSets sets = features::IndexSets::full();
    features::ThresholdPolicy thresholds;
    basis::BSplineSpec diurnal = basis::BSplineSpec::diurnal();
    basis::BSplineSpec annual = basis::BSplineSpec::annual();
    int k_max = 2;
    lasso::Settings lasso;
    double floor_fraction = 1e-3;
    std::size_t min_sample = 5000;  // effective-sample rows required
    int workers = 1;

    /// Throws ParameterError.
    void validate() const;
};

/// One nonzero coefficient with the column it multiplies.
struct Term {
    features::ColumnSpec spec;
    double coef = 0.0;
};

/// Sparse fit of one equation for one turbine.
struct EquationFit {
    features::Equation equation = features::Equation::SpeedMean;
    int turbine = 0;
    std::vector<Term> terms;
    double lambda = 0.0;
    double bic = 0.0;
    std::size_t columns = 0;  // design width after deduplication
    std::size_t dropped = 0;  // all-zero or duplicate columns removed
    bool degenerate = false;

    /// Sum of coef x column value at absolute time t.
    [[nodiscard]] double evaluate(const features::Tracks& tracks, std::int64_t t,
                                  std::span<const double> cumulative_row,
                                  std::span<const double> plain_row) const;
    /// Coefficient of a column, 0 when absent.
    [[nodiscard]] double coefficient(const features::ColumnSpec& spec) const;
};

/// Coefficients of all four equations per turbine, indexed [turbine][equation].
using JointEquations = std::vector<std::array<EquationFit, 4>>;

struct FittedJointModel {
    ModelConfig config;
    std::vector<std::string> labels;
    features::ThresholdSet thresholds;
    JointEquations equations;
    int iterations = 0;

    std::size_t sample_begin = 0;  // first row of the effective sample
    std::size_t sample_end = 0;
    std::int64_t start_epoch = 0;  // timestamp of panel row 0

    /// Full-length in-sample tracks (rows before sample_begin hold the
    /// pre-sample fill: residual 0, volatility proxy at its median).
    Eigen::MatrixXd speed_residuals;
    Eigen::MatrixXd power_residuals;
    Eigen::MatrixXd speed_vol;       // sigma proxy
    Eigen::MatrixXd power_vol_cbrt;  // varsigma^{1/3} proxy

    /// Per-turbine floors and medians of the volatility proxies.
    Eigen::VectorXd speed_vol_floor, power_vol_floor;
    Eigen::VectorXd speed_vol_median, power_vol_median;

    /// Standardized residual pool, one row per effective-sample time:
    /// z = eps / sigma, u = epsP / varsigma.
    Eigen::MatrixXd z_pool;
    Eigen::MatrixXd u_pool;

    /// Last rows of the training panel (max lag rows), kept with the model.
    Eigen::MatrixXd tail_speed, tail_power;

    Warnings warnings;

    [[nodiscard]] std::size_t turbines() const { return labels.size(); }
    [[nodiscard]] const EquationFit& fit(features::Equation e, int i) const {
        return equations[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)];
    }
};

/// Iteratively re-weighted lasso estimation of the joint model.
FittedJointModel fit_joint_model(const data::TurbinePanel& panel, const ModelConfig& config);

/// response - design * coefficients.
Eigen::VectorXd compute_residuals(const Eigen::MatrixXd& design, const Eigen::VectorXd& coefficients,
                                  const Eigen::VectorXd& response);

/// max(fitted, floor) with floor = fraction x median of the positive fitted
/// values. Throws DegenerateError when no fitted value is positive.
Eigen::VectorXd volatility_proxy(const Eigen::VectorXd& fitted, double floor_fraction,
                                 double* floor_out = nullptr);

/// Inverse-variance weights normalized to mean 1: speed sigma^-2, power
/// proxy^-6 (the proxy lives on the cube-root scale).
Eigen::VectorXd speed_weights(const Eigen::VectorXd& sigma);
Eigen::VectorXd power_weights(const Eigen::VectorXd& proxy_cbrt);

double median(std::vector<double> v);

}  // namespace wpf::model
