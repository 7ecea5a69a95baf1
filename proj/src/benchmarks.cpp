#include "wpf/benchmarks.hpp"

#include "wpf/calendar.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace wpf::bench {

// ---- Yule-Walker -------------------------------------------------------------

Eigen::MatrixXd autocovariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean, int lag) {
    const Eigen::Index n = x.rows();
    if (lag < 0 || lag >= n) throw ParameterError("autocovariance lag out of range");
    const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
    const Eigen::Index m = n - lag;
    return c.bottomRows(m).transpose() * c.topRows(m) / static_cast<double>(n);
}

namespace {

double log_det_spd(Eigen::MatrixXd s, double ridge, bool& regularized) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
        s.diagonal().array() += ridge;
        regularized = true;
        ldlt.compute(s);
    }
    return ldlt.vectorD().array().max(std::numeric_limits<double>::min()).log().sum();
}

}  // namespace

VarFit fit_var_yule_walker(const Eigen::MatrixXd& series, int max_order, Warnings* warnings) {
    const Eigen::Index n = series.rows();
    const Eigen::Index k = series.cols();
    if (max_order < 0) throw ParameterError("max_order must be >= 0");
    if (k < 1 || n < max_order + 2) throw ParameterError("series too short for the requested order");
    if (!series.allFinite()) throw ParameterError("Yule-Walker input contains non-finite values");
    const Eigen::VectorXd mean = series.colwise().mean();
    std::vector<Eigen::MatrixXd> gamma;
    for (int h = 0; h <= max_order; ++h) gamma.push_back(autocovariance(series, mean, h));
    if ((gamma[0].diagonal().array() <= 0.0).any()) throw DegenerateError("Yule-Walker: constant series");
    const double ridge = 1e-10 * std::max(1.0, gamma[0].trace() / static_cast<double>(k));
    auto g = [&](int h) -> Eigen::MatrixXd { return h >= 0 ? gamma[static_cast<std::size_t>(h)] : gamma[static_cast<std::size_t>(-h)].transpose(); };

    VarFit best;
    bool any_ridge = false;
    for (int p = 0; p <= max_order; ++p) {
        VarFit fit;
        fit.order = p;
        fit.mean = mean;
        Eigen::MatrixXd sigma = gamma[0];
        if (p > 0) {
            const Eigen::Index dim = static_cast<Eigen::Index>(p) * k;
            Eigen::MatrixXd R(dim, dim);
            Eigen::MatrixXd G(k, dim);
            for (int i = 0; i < p; ++i) {
                G.middleCols(i * k, k) = g(i + 1);
                for (int j = 0; j < p; ++j) R.block(i * k, j * k, k, k) = g(j - i);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(R);
            if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
                R.diagonal().array() += ridge;
                llt.compute(R);
                fit.regularized = true;
            }
            const Eigen::MatrixXd At = llt.solve(G.transpose());  // [A_1 .. A_p]'
            for (int i = 0; i < p; ++i) {
                fit.coefficients.push_back(At.middleRows(i * k, k).transpose());
                sigma -= fit.coefficients.back() * g(i + 1).transpose();
            }
        }
        fit.innovation = sigma;
        const double ld = log_det_spd(0.5 * (sigma + sigma.transpose()), ridge, fit.regularized);
        fit.aic = static_cast<double>(n) * ld + 2.0 * p * static_cast<double>(k * k);
        any_ridge = any_ridge || fit.regularized;
        if (p == 0 || fit.aic < best.aic) best = std::move(fit);
    }
    if (any_ridge && warnings) warnings->push_back("Yule-Walker: singular autocovariance system, ridge 1e-10 applied");
    return best;
}

VarFit fit_ar_yule_walker(std::span<const double> series, int max_order, Warnings* warnings) {
    const Eigen::Map<const Eigen::VectorXd> v(series.data(), static_cast<Eigen::Index>(series.size()));
    return fit_var_yule_walker(Eigen::MatrixXd(v), max_order, warnings);
}

Eigen::MatrixXd var_forecast(const VarFit& fit, const Eigen::MatrixXd& history, int horizon) {
    const Eigen::Index k = fit.mean.size();
    const int p = fit.order;
    if (history.cols() != k) throw ParameterError("VAR history has the wrong width");
    if (history.rows() < p) throw ParameterError("VAR history shorter than the order");
    // buffer holds centered values: p history rows then the forecasts
    Eigen::MatrixXd buf(p + horizon, k);
    if (p > 0) buf.topRows(p) = history.bottomRows(p).rowwise() - fit.mean.transpose();
    for (int h = 0; h < horizon; ++h) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
        for (int i = 1; i <= p; ++i) x += fit.coefficients[static_cast<std::size_t>(i - 1)] * buf.row(p + h - i).transpose();
        buf.row(p + h) = x.transpose();
    }
    return buf.bottomRows(horizon).rowwise() + fit.mean.transpose();
}

double spectral_radius(const VarFit& fit) {
    const int p = fit.order;
    if (p == 0) return 0.0;
    const Eigen::Index k = fit.mean.size();
    const Eigen::Index dim = static_cast<Eigen::Index>(p) * k;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < p; ++i) comp.block(0, i * k, k, k) = fit.coefficients[static_cast<std::size_t>(i)];
    if (p > 1) comp.bottomLeftCorner(dim - k, dim - k).setIdentity();
    return Eigen::EigenSolver<Eigen::MatrixXd>(comp, false).eigenvalues().cwiseAbs().maxCoeff();
}

// ---- BFGS via GSL --------------------------------------------------------------

namespace {

struct Objective {
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> f;  // value, optional gradient
};

double gsl_f(const gsl_vector* v, void* params) {
    auto* obj = static_cast<Objective*>(params);
    const Eigen::Map<const Eigen::VectorXd> x(v->data, static_cast<Eigen::Index>(v->size));
    const double val = obj->f(x, nullptr);
    return std::isfinite(val) ? val : std::numeric_limits<double>::max();
}

void gsl_df(const gsl_vector* v, void* params, gsl_vector* df) {
    auto* obj = static_cast<Objective*>(params);
    const Eigen::Map<const Eigen::VectorXd> x(v->data, static_cast<Eigen::Index>(v->size));
    Eigen::VectorXd g(x.size());
    obj->f(x, &g);
    for (Eigen::Index i = 0; i < g.size(); ++i) gsl_vector_set(df, static_cast<std::size_t>(i), g(i));
}

void gsl_fdf(const gsl_vector* v, void* params, double* f, gsl_vector* df) {
    *f = gsl_f(v, params);
    gsl_df(v, params, df);
}

// Returns true on convergence; x is updated in place.
bool bfgs(Objective& obj, Eigen::VectorXd& x, int max_iter, double grad_tol) {
    gsl_set_error_handler_off();
    const auto n = static_cast<std::size_t>(x.size());
    gsl_multimin_function_fdf fdf{&gsl_f, &gsl_df, &gsl_fdf, n, &obj};
    gsl_vector* x0 = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x0, i, x(static_cast<Eigen::Index>(i)));
    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    gsl_multimin_fdfminimizer_set(s, &fdf, x0, 0.1, 0.1);
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        const int status = gsl_multimin_fdfminimizer_iterate(s);
        if (gsl_multimin_test_gradient(s->gradient, grad_tol) == GSL_SUCCESS) {
            converged = true;
            break;
        }
        if (status != GSL_SUCCESS) {
            // no further progress possible along the search direction
            converged = gsl_multimin_test_gradient(s->gradient, grad_tol * 1e3) == GSL_SUCCESS;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = gsl_vector_get(s->x, i);
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x0);
    return converged;
}

void numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                      Eigen::VectorXd& g) {
    g.resize(x.size());
    Eigen::VectorXd y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        y(i) = x(i) + h;
        const double fp = f(y);
        y(i) = x(i) - h;
        const double fm = f(y);
        y(i) = x(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
}

}  // namespace

// ---- ARMA(1,1) -----------------------------------------------------------------

double arma11_profile_nll(std::span<const double> y, double phi, double theta, double* intercept, double* sigma2) {
    const std::size_t n = y.size();
    if (n < 3) throw ParameterError("ARMA(1,1) needs at least 3 observations");
    std::vector<double> a(n, 0.0), g(n, 0.0);
    double sag = 0.0, sgg = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
        a[t] = y[t] - phi * y[t - 1] - theta * a[t - 1];
        g[t] = 1.0 - theta * g[t - 1];
        sag += a[t] * g[t];
        sgg += g[t] * g[t];
    }
    const double c = sag / sgg;
    double sse = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
        const double e = a[t] - c * g[t];
        sse += e * e;
    }
    const double N = static_cast<double>(n - 1);
    const double s2 = sse / N;
    if (intercept) *intercept = c;
    if (sigma2) *sigma2 = s2;
    if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
    return 0.5 * N * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
}

Arma11Fit fit_arma11_mle(std::span<const double> y) {
    if (y.size() < 100) throw ParameterError("ARMA(1,1) fit needs n >= 100");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0, cov = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        var += (y[t] - mean) * (y[t] - mean);
        if (t > 0) cov += (y[t] - mean) * (y[t - 1] - mean);
    }
    if (!(var > 0.0)) throw DegenerateError("ARMA(1,1): constant series");
    const double N = static_cast<double>(y.size() - 1);
    auto value = [&](const Eigen::VectorXd& x) {
        const double phi = std::tanh(std::clamp(x(0), -15.0, 15.0));
        const double theta = std::tanh(std::clamp(x(1), -15.0, 15.0));
        return arma11_profile_nll(y, phi, theta) / N;
    };
    Objective obj{[&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) numeric_gradient(value, x, *g);
        return value(x);
    }};
    Eigen::VectorXd x(2);
    x << std::atanh(std::clamp(cov / var, -0.9, 0.9)), 0.0;
    Arma11Fit fit;
    fit.converged = bfgs(obj, x, 500, 1e-7);
    fit.phi = std::tanh(std::clamp(x(0), -15.0, 15.0));
    fit.theta = std::tanh(std::clamp(x(1), -15.0, 15.0));
    fit.loglik = -arma11_profile_nll(y, fit.phi, fit.theta, &fit.intercept, &fit.sigma2);
    fit.boundary = std::abs(fit.phi) > 0.999 || std::abs(fit.theta) > 0.999;
    return fit;
}

std::vector<double> arma11_forecast(const Arma11Fit& fit, std::span<const double> history, int horizon) {
    if (history.empty()) throw ParameterError("ARMA forecast needs history");
    double e = 0.0;
    for (std::size_t t = 1; t < history.size(); ++t) {
        e = history[t] - fit.intercept - fit.phi * history[t - 1] - fit.theta * e;
    }
    std::vector<double> out(static_cast<std::size_t>(horizon));
    double prev = history.back();
    for (int h = 0; h < horizon; ++h) {
        const double f = fit.intercept + fit.phi * prev + (h == 0 ? fit.theta * e : 0.0);
        out[static_cast<std::size_t>(h)] = f;
        prev = f;
    }
    return out;
}

// ---- WPPT / GWPPT ----------------------------------------------------------------

Eigen::Matrix<double, 1, kWpptRegressors> wppt_regressors(double p_t, double p_tm1, double w, double d) {
    const double a = 2.0 * std::numbers::pi * d / 144.0;
    Eigen::Matrix<double, 1, kWpptRegressors> x;
    x << 1.0, p_t, p_tm1, w, w * w, std::cos(a), std::cos(2.0 * a), std::sin(a), std::sin(2.0 * a);
    return x;
}

double speed_persistence(const data::TurbinePanel& panel, int turbine, std::size_t origin, int) {
    return panel.speed(static_cast<Eigen::Index>(origin), turbine);
}

namespace {

Eigen::Matrix<double, 1, kWpptRegressors> regressors_at(const data::TurbinePanel& panel, int turbine,
                                                        std::size_t origin, int k, const SpeedProvider& speed) {
    if (origin < 1) throw ParameterError("WPPT needs P_{t-1}");
    const auto r = static_cast<Eigen::Index>(origin);
    const std::int64_t ts = panel.timestamps[origin] + static_cast<std::int64_t>(k) * calendar::kStepSeconds;
    return wppt_regressors(panel.power(r, turbine), panel.power(r - 1, turbine), speed(panel, turbine, origin, k),
                           calendar::time_of_day(ts));
}

struct RegressionData {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

RegressionData wppt_data(const data::TurbinePanel& panel, int turbine, int k, std::size_t begin, std::size_t end,
                         const SpeedProvider& speed) {
    if (k < 1) throw ParameterError("WPPT horizon must be >= 1");
    if (end > panel.rows()) throw ParameterError("WPPT fit range beyond panel");
    const std::size_t first = std::max<std::size_t>(begin, 1);
    if (end < first + static_cast<std::size_t>(k) + kWpptRegressors) throw ParameterError("WPPT fit range too short");
    const std::size_t last = end - static_cast<std::size_t>(k);  // exclusive
    RegressionData d;
    d.x.resize(static_cast<Eigen::Index>(last - first), kWpptRegressors);
    d.y.resize(static_cast<Eigen::Index>(last - first));
    for (std::size_t t = first; t < last; ++t) {
        const auto r = static_cast<Eigen::Index>(t - first);
        d.x.row(r) = regressors_at(panel, turbine, t, k, speed);
        d.y(r) = panel.power(static_cast<Eigen::Index>(t) + k, turbine);
    }
    return d;
}

Eigen::Matrix<double, kWpptRegressors, 1> ols(const RegressionData& d) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
    if (qr.rank() < kWpptRegressors) throw DegenerateError("WPPT design is rank deficient");
    return qr.solve(d.y);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double log_ndtr(double x) {
    if (x > -30.0) return std::log(std_normal_cdf(x));
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// phi(x) / Phi(x)
double mills(double x) {
    if (x > -30.0) return std_normal_pdf(x) / std_normal_cdf(x);
    const double x2 = x * x;
    return -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2));
}

}  // namespace

WpptFit fit_wppt(const data::TurbinePanel& panel, int turbine, int k, std::size_t begin, std::size_t end,
                 const SpeedProvider& speed) {
    WpptFit fit;
    fit.k = k;
    fit.coef = ols(wppt_data(panel, turbine, k, begin, end, speed));
    return fit;
}

double wppt_forecast(const WpptFit& fit, const data::TurbinePanel& panel, int turbine, std::size_t origin,
                     const SpeedProvider& speed) {
    return regressors_at(panel, turbine, origin, fit.k, speed).dot(fit.coef.transpose());
}

double censored_mean(double pstar, double sigma, double l, double u) {
    if (!(l < u)) throw ParameterError("censoring bounds need l < u");
    if (!(sigma > 1e-12 * std::max(1.0, u - l))) return std::clamp(pstar, l, u);
    const double f1 = (l - pstar) / sigma;
    const double f2 = (u - pstar) / sigma;
    const double v = (std_normal_cdf(f2) - std_normal_cdf(f1)) * pstar +
                     (std_normal_pdf(f1) - std_normal_pdf(f2)) * sigma + u * (1.0 - std_normal_cdf(f2)) +
                     l * std_normal_cdf(f1);
    return std::clamp(v, l, u);
}

GwpptFit fit_gwppt(const data::TurbinePanel& panel, int turbine, int k, std::size_t begin, std::size_t end, double l,
                   double u, const SpeedProvider& speed) {
    if (!(l < u)) throw ParameterError("GWPPT needs l < u");
    const RegressionData d = wppt_data(panel, turbine, k, begin, end, speed);
    const Eigen::Index m = d.x.rows();
    // Internal standardization of regressors and response.
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(kWpptRegressors), sd = Eigen::VectorXd::Ones(kWpptRegressors);
    for (int j = 1; j < kWpptRegressors; ++j) {
        mu(j) = d.x.col(j).mean();
        const double s = std::sqrt((d.x.col(j).array() - mu(j)).square().mean());
        sd(j) = s > 0.0 ? s : 1.0;
    }
    Eigen::MatrixXd xs = d.x;
    for (int j = 1; j < kWpptRegressors; ++j) xs.col(j) = (d.x.col(j).array() - mu(j)) / sd(j);
    const double ymu = d.y.mean();
    const double ysd = std::max(1e-12, std::sqrt((d.y.array() - ymu).square().mean()));
    const Eigen::VectorXd ys = (d.y.array() - ymu) / ysd;
    const double ls = (l - ymu) / ysd, us = (u - ymu) / ysd;

    Objective obj{[&](const Eigen::VectorXd& th, Eigen::VectorXd* grad) {
        const Eigen::VectorXd b = th.head(kWpptRegressors);
        const double logs = th(kWpptRegressors);
        const double s = std::exp(logs);
        const Eigen::VectorXd eta = xs * b;
        double ll = 0.0;
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(kWpptRegressors);
        double gs = 0.0;
        for (Eigen::Index r = 0; r < m; ++r) {
            const double y = d.y(r);
            double dldeta = 0.0;
            if (y <= l) {
                const double a = (ls - eta(r)) / s;
                ll += log_ndtr(a);
                const double lam = mills(a);
                dldeta = -lam / s;
                gs += -lam * a;
            } else if (y >= u) {
                const double c = (us - eta(r)) / s;
                ll += log_ndtr(-c);
                const double lam = mills(-c);
                dldeta = lam / s;
                gs += lam * c;
            } else {
                const double z = (ys(r) - eta(r)) / s;
                ll += -logs - 0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
                dldeta = z / s;
                gs += -1.0 + z * z;
            }
            if (grad) gb += dldeta * xs.row(r).transpose();
        }
        if (grad) {
            grad->resize(kWpptRegressors + 1);
            grad->head(kWpptRegressors) = -gb / static_cast<double>(m);
            (*grad)(kWpptRegressors) = -gs / static_cast<double>(m);
        }
        return -ll / static_cast<double>(m);
    }};

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    if (qr.rank() < kWpptRegressors) throw DegenerateError("GWPPT design is rank deficient");
    const Eigen::VectorXd b0 = qr.solve(ys);
    const double s0 = std::sqrt((ys - xs * b0).array().square().mean());
    Eigen::VectorXd th(kWpptRegressors + 1);
    th.head(kWpptRegressors) = b0;
    th(kWpptRegressors) = std::log(std::max(s0, 1e-6));
    GwpptFit fit;
    fit.k = k;
    fit.lower = l;
    fit.upper = u;
    fit.converged = bfgs(obj, th, 1000, 1e-6);
    // back to raw units
    Eigen::Matrix<double, kWpptRegressors, 1> b;
    b(0) = ysd * th(0) + ymu;
    for (int j = 1; j < kWpptRegressors; ++j) {
        b(j) = ysd * th(j) / sd(j);
        b(0) -= b(j) * mu(j);
    }
    fit.coef = b;
    fit.sigma = ysd * std::exp(th(kWpptRegressors));
    return fit;
}

double gwppt_forecast(const GwpptFit& fit, const data::TurbinePanel& panel, int turbine, std::size_t origin,
                      const SpeedProvider& speed) {
    const double pstar = regressors_at(panel, turbine, origin, fit.k, speed).dot(fit.coef.transpose());
    return censored_mean(pstar, fit.sigma, fit.lower, fit.upper);
}

// ---- registry ------------------------------------------------------------------

namespace {

int max_horizon(const std::vector<int>& horizons) {
    if (horizons.empty()) throw ParameterError("no forecast horizons");
    const int h = *std::max_element(horizons.begin(), horizons.end());
    if (*std::min_element(horizons.begin(), horizons.end()) < 1) throw ParameterError("horizons must be >= 1");
    return h;
}

Eigen::MatrixXd panel_block(const data::TurbinePanel& panel, std::size_t begin, std::size_t end,
                            const std::vector<int>& speed_cols, const std::vector<int>& power_cols) {
    const auto rows = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(speed_cols.size() + power_cols.size()));
    Eigen::Index c = 0;
    for (int j : speed_cols) x.col(c++) = panel.speed.col(j).segment(static_cast<Eigen::Index>(begin), rows);
    for (int j : power_cols) x.col(c++) = panel.power.col(j).segment(static_cast<Eigen::Index>(begin), rows);
    return x;
}

class Persistence final : public Forecaster {
public:
    std::string id() const override { return "persistence"; }
    void fit(const data::TurbinePanel&, std::size_t, std::size_t, const std::vector<int>&) override {}
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), panel.power.cols());
        for (Eigen::Index h = 0; h < out.rows(); ++h) out.row(h) = panel.power.row(static_cast<Eigen::Index>(origin));
        return out;
    }
};

// One Yule-Walker model per group of (speed, power) columns; forecasts the power columns.
class YuleWalker final : public Forecaster {
public:
    enum class Kind { Ar, Bvar, Var };
    YuleWalker(Kind kind, int max_order) : kind_(kind), max_order_(max_order) {}
    std::string id() const override {
        return kind_ == Kind::Ar ? "ar" : kind_ == Kind::Bvar ? "bvar" : "var";
    }
    void fit(const data::TurbinePanel& panel, std::size_t begin, std::size_t end, const std::vector<int>&) override {
        groups_.clear();
        fits_.clear();
        const int d = static_cast<int>(panel.turbines());
        if (kind_ == Kind::Var) {
            Group g;
            for (int j = 0; j < d; ++j) g.speed.push_back(j);
            for (int j = 0; j < d; ++j) g.power.push_back(j);
            groups_.push_back(g);
        } else {
            for (int j = 0; j < d; ++j) {
                Group g;
                if (kind_ == Kind::Bvar) g.speed.push_back(j);
                g.power.push_back(j);
                groups_.push_back(g);
            }
        }
        for (const auto& g : groups_) {
            fits_.push_back(fit_var_yule_walker(panel_block(panel, begin, end, g.speed, g.power), max_order_, &warnings_));
        }
    }
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override {
        const int H = max_horizon(horizons);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), panel.power.cols());
        for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
            const auto& g = groups_[gi];
            const auto& f = fits_[gi];
            const std::size_t start = origin + 1 >= static_cast<std::size_t>(f.order) ? origin + 1 - static_cast<std::size_t>(f.order) : 0;
            const Eigen::MatrixXd hist = panel_block(panel, start, origin + 1, g.speed, g.power);
            const Eigen::MatrixXd fc = var_forecast(f, hist, H);
            const auto off = static_cast<Eigen::Index>(g.speed.size());
            for (std::size_t h = 0; h < horizons.size(); ++h) {
                for (std::size_t c = 0; c < g.power.size(); ++c) {
                    out(static_cast<Eigen::Index>(h), g.power[c]) = fc(horizons[h] - 1, off + static_cast<Eigen::Index>(c));
                }
            }
        }
        return out;
    }

private:
    struct Group {
        std::vector<int> speed, power;
    };
    Kind kind_;
    int max_order_;
    std::vector<Group> groups_;
    std::vector<VarFit> fits_;
    Warnings warnings_;
};

class Arma11 final : public Forecaster {
public:
    explicit Arma11(int filter_rows) : filter_rows_(filter_rows) {}
    std::string id() const override { return "arma11"; }
    void fit(const data::TurbinePanel& panel, std::size_t begin, std::size_t end, const std::vector<int>&) override {
        fits_.clear();
        for (Eigen::Index j = 0; j < panel.power.cols(); ++j) {
            const Eigen::VectorXd y = panel.power.col(j).segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
            fits_.push_back(fit_arma11_mle({y.data(), static_cast<std::size_t>(y.size())}));
        }
    }
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override {
        const int H = max_horizon(horizons);
        const std::size_t start = origin > static_cast<std::size_t>(filter_rows_) ? origin - static_cast<std::size_t>(filter_rows_) : 0;
        Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), panel.power.cols());
        for (Eigen::Index j = 0; j < panel.power.cols(); ++j) {
            const Eigen::VectorXd hist = panel.power.col(j).segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(origin + 1 - start));
            const auto fc = arma11_forecast(fits_[static_cast<std::size_t>(j)], {hist.data(), static_cast<std::size_t>(hist.size())}, H);
            for (std::size_t h = 0; h < horizons.size(); ++h) out(static_cast<Eigen::Index>(h), j) = fc[static_cast<std::size_t>(horizons[h] - 1)];
        }
        return out;
    }

private:
    int filter_rows_;
    std::vector<Arma11Fit> fits_;
};

template <typename Fit>
class Dynamic final : public Forecaster {
public:
    Dynamic(bool censored, BenchmarkOptions opt) : censored_(censored), opt_(std::move(opt)) {}
    std::string id() const override { return censored_ ? "gwppt" : "wppt"; }
    void fit(const data::TurbinePanel& panel, std::size_t begin, std::size_t end, const std::vector<int>& horizons) override {
        fits_.clear();
        const int d = static_cast<int>(panel.turbines());
        for (int k : horizons) {
            if (fits_.count(k)) continue;
            auto& per = fits_[k];
            for (int j = 0; j < d; ++j) {
                if constexpr (std::is_same_v<Fit, GwpptFit>) {
                    per.push_back(fit_gwppt(panel, j, k, begin, end, opt_.lower, opt_.upper, opt_.speed));
                } else {
                    per.push_back(fit_wppt(panel, j, k, begin, end, opt_.speed));
                }
            }
        }
    }
    Eigen::MatrixXd forecast(const data::TurbinePanel& panel, std::size_t origin,
                             const std::vector<int>& horizons) const override {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), panel.power.cols());
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            const auto it = fits_.find(horizons[h]);
            if (it == fits_.end()) throw ParameterError(id() + " was not fitted for horizon " + std::to_string(horizons[h]));
            for (Eigen::Index j = 0; j < out.cols(); ++j) {
                const auto& f = it->second[static_cast<std::size_t>(j)];
                if constexpr (std::is_same_v<Fit, GwpptFit>) {
                    out(static_cast<Eigen::Index>(h), j) = gwppt_forecast(f, panel, static_cast<int>(j), origin, opt_.speed);
                } else {
                    out(static_cast<Eigen::Index>(h), j) = wppt_forecast(f, panel, static_cast<int>(j), origin, opt_.speed);
                }
            }
        }
        return out;
    }

private:
    bool censored_;
    BenchmarkOptions opt_;
    std::map<int, std::vector<Fit>> fits_;
};

}  // namespace

std::vector<std::string> benchmark_ids() { return {"persistence", "ar", "bvar", "var", "arma11", "wppt", "gwppt"}; }

std::unique_ptr<Forecaster> make_benchmark(const std::string& id, const BenchmarkOptions& options) {
    if (id == "persistence") return std::make_unique<Persistence>();
    if (id == "ar") return std::make_unique<YuleWalker>(YuleWalker::Kind::Ar, options.max_order);
    if (id == "bvar") return std::make_unique<YuleWalker>(YuleWalker::Kind::Bvar, options.max_order);
    if (id == "var") return std::make_unique<YuleWalker>(YuleWalker::Kind::Var, options.var_max_order);
    if (id == "arma11") return std::make_unique<Arma11>(options.filter_rows);
    if (id == "wppt") return std::make_unique<Dynamic<WpptFit>>(false, options);
    if (id == "gwppt") return std::make_unique<Dynamic<GwpptFit>>(true, options);
    throw ParameterError("unknown benchmark id '" + id + "'");
}

}  // namespace wpf::bench
