#pragma once

#include "wpf/error.hpp"
#include "wpf/panel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wpf::bench {

// ---- Yule-Walker AR / VAR -------------------------------------------------

struct VarFit {
    int order = 0;
    Eigen::VectorXd mean;
    std::vector<Eigen::MatrixXd> coefficients;  // A_1..A_p, k x k
    Eigen::MatrixXd innovation;                 // Sigma_p
    double aic = 0.0;
    bool regularized = false;
};

/// Sample autocovariance Gamma(h) = (1/n) sum (x_{t+h} - m)(x_t - m)'.
Eigen::MatrixXd autocovariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean, int lag);

/// Yule-Walker fit of orders 0..max_order, keeping the AIC minimizer
/// (n log det Sigma_p + 2 p k^2). Singular systems get a 1e-10 ridge and a warning.
VarFit fit_var_yule_walker(const Eigen::MatrixXd& series, int max_order, Warnings* warnings = nullptr);

/// Univariate case.
VarFit fit_ar_yule_walker(std::span<const double> series, int max_order, Warnings* warnings = nullptr);

/// Rows 1..horizon of the recursive forecast from the last `order` rows of `history`.
Eigen::MatrixXd var_forecast(const VarFit& fit, const Eigen::MatrixXd& history, int horizon);

/// Largest modulus of the companion-matrix eigenvalues.
double spectral_radius(const VarFit& fit);

// ---- ARMA(1,1) --------------------------------------------------------------

struct Arma11Fit {
    double phi = 0.0;
    double theta = 0.0;
    double intercept = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    bool boundary = false;  // |phi| or |theta| ended near 1
    bool converged = true;
};

/// Conditional Gaussian likelihood (innovation before the sample = 0),
/// intercept and variance profiled out, maximized by BFGS over
/// (atanh phi, atanh theta).
Arma11Fit fit_arma11_mle(std::span<const double> series);

/// Profiled negative log-likelihood at (phi, theta); used by the fit and tests.
double arma11_profile_nll(std::span<const double> series, double phi, double theta, double* intercept = nullptr,
                          double* sigma2 = nullptr);

/// Forecasts 1..horizon from the end of `history` (innovations filtered from
/// the start of `history` with e = 0).
std::vector<double> arma11_forecast(const Arma11Fit& fit, std::span<const double> history, int horizon);

// ---- WPPT / GWPPT -----------------------------------------------------------

inline constexpr int kWpptRegressors = 9;

/// [1, P_t, P_{t-1}, W, W^2, cos(2 pi d/144), cos(4 pi d/144), sin(2 pi d/144), sin(4 pi d/144)].
Eigen::Matrix<double, 1, kWpptRegressors> wppt_regressors(double p_t, double p_tm1, double w_future, double d_future);

/// Source of W_{t+k|t}; the default is speed persistence W_t.
using SpeedProvider = std::function<double(const data::TurbinePanel&, int turbine, std::size_t origin, int k)>;
double speed_persistence(const data::TurbinePanel& panel, int turbine, std::size_t origin, int k);

struct WpptFit {
    int k = 1;
    Eigen::Matrix<double, kWpptRegressors, 1> coef = Eigen::Matrix<double, kWpptRegressors, 1>::Zero();
};

/// OLS on origins t in [begin, end - k), target P_{t+k}. Throws DegenerateError when rank deficient.
WpptFit fit_wppt(const data::TurbinePanel& panel, int turbine, int k, std::size_t begin, std::size_t end,
                 const SpeedProvider& speed = speed_persistence);
double wppt_forecast(const WpptFit& fit, const data::TurbinePanel& panel, int turbine, std::size_t origin,
                     const SpeedProvider& speed = speed_persistence);

struct GwpptFit {
    int k = 1;
    Eigen::Matrix<double, kWpptRegressors, 1> coef = Eigen::Matrix<double, kWpptRegressors, 1>::Zero();
    double sigma = 1.0;
    double lower = 0.0;
    double upper = 1500.0;
    bool converged = true;
};

/// Mean of a normal(pstar, sigma) variable censored to [l, u]:
/// (Phi(f2) - Phi(f1)) P* + (phi(f1) - phi(f2)) sigma + u (1 - Phi(f2)) + l Phi(f1).
double censored_mean(double pstar, double sigma, double l, double u);

/// Two-sided Tobit maximum likelihood on the WPPT regressors.
GwpptFit fit_gwppt(const data::TurbinePanel& panel, int turbine, int k, std::size_t begin, std::size_t end,
                   double l = 0.0, double u = 1500.0, const SpeedProvider& speed = speed_persistence);
double gwppt_forecast(const GwpptFit& fit, const data::TurbinePanel& panel, int turbine, std::size_t origin,
                      const SpeedProvider& speed = speed_persistence);

// ---- registry ---------------------------------------------------------------

/// Power forecaster over all turbines, fitted once on a row range.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    [[nodiscard]] virtual std::string id() const = 0;
    /// Fits on rows [begin, end) for the given horizons.
    virtual void fit(const data::TurbinePanel& panel, std::size_t begin, std::size_t end,
                     const std::vector<int>& horizons) = 0;
    /// Power forecasts, one row per horizon, one column per turbine; reads rows <= origin only.
    [[nodiscard]] virtual Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                                                   const std::vector<int>& horizons) const = 0;
};

struct BenchmarkOptions {
    int max_order = 12;        // AR, BVAR
    int var_max_order = 6;     // all-turbine VAR
    double lower = 0.0;        // GWPPT censoring
    double upper = 1500.0;
    int filter_rows = 1000;    // ARMA innovation filter length
    SpeedProvider speed = speed_persistence;
};

std::vector<std::string> benchmark_ids();
/// Throws ParameterError for an unknown id.
std::unique_ptr<Forecaster> make_benchmark(const std::string& id, const BenchmarkOptions& options = {});

}  // namespace wpf::bench
