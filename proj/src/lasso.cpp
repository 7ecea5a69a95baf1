#include "wpf/lasso.hpp"

#include "wpf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wpf::lasso {

namespace {

// Internal preconditioning: columns scaled to unit weighted norm (centered
// when the problem has an unconstrained intercept), response likewise.
struct Scaling {
    bool center = false;
    double weight_sum = 0.0;
    double ybar = 0.0;
    double sy = 0.0;
    Eigen::VectorXd xbar;
    Eigen::VectorXd sx;  // 0 marks an unusable column
    Eigen::VectorXd w;   // materialized weights
};

Scaling prepare(const LassoProblem& p) {
    Scaling s;
    const Eigen::Index m = p.rows();
    const Eigen::Index n = p.cols();
    s.w = p.weights.size() ? p.weights : Eigen::VectorXd::Ones(m);
    s.weight_sum = s.w.sum();
    s.center = p.intercept >= 0 && !p.nonnegative;
    s.xbar = Eigen::VectorXd::Zero(n);
    s.sx = Eigen::VectorXd::Zero(n);
    if (s.center) s.ybar = s.w.dot(p.response) / s.weight_sum;
    s.sy = std::sqrt((s.w.array() * (p.response.array() - s.ybar).square()).sum());
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto x = p.design.col(j);
        if (s.center) s.xbar(j) = s.w.dot(x) / s.weight_sum;
        const double norm = std::sqrt((s.w.array() * (x.array() - s.xbar(j)).square()).sum());
        const double scale = std::max(1.0, x.cwiseAbs().maxCoeff()) * std::sqrt(s.weight_sum);
        s.sx(j) = norm > 1e-12 * scale ? norm : 0.0;
    }
    if (s.center) s.sx(p.intercept) = 0.0;
    return s;
}

// Covariance-update state: standardized coefficients, gradient
// G_j = z_j' W r~, and lazily computed Gram columns for variables that
// have ever been nonzero.
struct State {
    Eigen::VectorXd beta;
    Eigen::VectorXd grad;
    Eigen::VectorXd c0;  // z_j' W y~
    std::vector<Eigen::VectorXd> gram;
};

const Eigen::VectorXd& gram_column(const LassoProblem& p, const Scaling& s, State& st, Eigen::Index k) {
    auto& col = st.gram[static_cast<std::size_t>(k)];
    if (col.size() == 0) {
        const Eigen::VectorXd v =
            (s.w.array() * (p.design.col(k).array() - s.xbar(k))).matrix() / s.sx(k);
        col = p.design.transpose() * v;
        for (Eigen::Index j = 0; j < p.cols(); ++j) col(j) = s.sx(j) > 0.0 ? col(j) / s.sx(j) : 0.0;
    }
    return col;
}

// Computes the missing Gram columns of `cols` in one matrix product.
void prefetch_gram(const LassoProblem& p, const Scaling& s, State& st, const std::vector<Eigen::Index>& cols) {
    if (cols.size() < 2) return;
    Eigen::MatrixXd v(p.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const Eigen::Index k = cols[c];
        v.col(static_cast<Eigen::Index>(c)) = (s.w.array() * (p.design.col(k).array() - s.xbar(k))).matrix() / s.sx(k);
    }
    const Eigen::MatrixXd g = p.design.transpose() * v;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto& col = st.gram[static_cast<std::size_t>(cols[c])];
        col = g.col(static_cast<Eigen::Index>(c));
        for (Eigen::Index j = 0; j < p.cols(); ++j) col(j) = s.sx(j) > 0.0 ? col(j) / s.sx(j) : 0.0;
    }
}

double std_objective(const State& st, const Eigen::VectorXd& half_lambda) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < st.beta.size(); ++j) {
        if (st.beta(j) != 0.0 && std::isfinite(half_lambda(j))) pen += 2.0 * half_lambda(j) * std::abs(st.beta(j));
    }
    // ||r~||_W^2 = 1 - beta'c0 - beta'G
    return 1.0 - st.beta.dot(st.c0) - st.beta.dot(st.grad) + pen;
}

Eigen::VectorXd half_lambdas(const LassoProblem& p, const Scaling& s, double lambda) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (s.sx(j) > 0.0 && p.penalized(j)) {
            h(j) = std::isinf(lambda) ? lambda : lambda / (2.0 * s.sy * s.sx(j));
        }
    }
    return h;
}

State start_state(const LassoProblem& p, const Scaling& s, const Eigen::VectorXd& start) {
    State st;
    const Eigen::Index n = p.cols();
    st.beta = Eigen::VectorXd::Zero(n);
    st.gram.resize(static_cast<std::size_t>(n));
    const Eigen::VectorXd wy = (s.w.array() * (p.response.array() - s.ybar)).matrix() / s.sy;
    st.c0 = p.design.transpose() * wy;
    for (Eigen::Index j = 0; j < n; ++j) st.c0(j) = s.sx(j) > 0.0 ? st.c0(j) / s.sx(j) : 0.0;
    st.grad = st.c0;
    if (start.size() == n) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (s.sx(j) > 0.0 && start(j) != 0.0) {
                st.beta(j) = start(j) * s.sx(j) / s.sy;
                st.grad -= st.beta(j) * gram_column(p, s, st, j);
            }
        }
    }
    return st;
}

struct SweepStats {
    int sweeps = 0;
    bool converged = false;
    int increases = 0;
};

SweepStats descend(const LassoProblem& p, const Scaling& s, const Eigen::VectorXd& half_lambda,
                   State& st, const Settings& settings) {
    SweepStats out;
    const Eigen::Index n = p.cols();
    std::vector<Eigen::Index> usable;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (s.sx(j) > 0.0) usable.push_back(j);
    }
    std::vector<Eigen::Index> active;
    bool full = true;
    double prev = settings.track_objective ? std_objective(st, half_lambda) : 0.0;
    while (out.sweeps < settings.max_sweeps) {
        const auto& set = full ? usable : active;
        if (full) {
            st.grad = st.c0;
            for (Eigen::Index k : usable) {
                if (st.beta(k) != 0.0) st.grad -= st.beta(k) * gram_column(p, s, st, k);
            }
            // current KKT violators will almost surely enter during this sweep
            std::vector<Eigen::Index> entering;
            for (Eigen::Index j : usable) {
                if (st.beta(j) != 0.0 || st.gram[static_cast<std::size_t>(j)].size() != 0) continue;
                const double g = p.nonnegative ? st.grad(j) : std::abs(st.grad(j));
                if (g > half_lambda(j)) entering.push_back(j);
            }
            prefetch_gram(p, s, st, entering);
        }
        double max_delta = 0.0;
        for (Eigen::Index j : set) {
            const double rho = st.grad(j) + st.beta(j);
            double nb = soft_threshold(rho, half_lambda(j));
            if (p.nonnegative) nb = rho - half_lambda(j) > 0.0 ? rho - half_lambda(j) : 0.0;
            const double delta = nb - st.beta(j);
            if (delta != 0.0) {
                const Eigen::VectorXd& g = gram_column(p, s, st, j);
                if (full) {
                    st.grad -= delta * g;
                } else {
                    // the full gradient is rebuilt before the next full sweep
                    for (Eigen::Index k : active) st.grad(k) -= delta * g(k);
                }
                st.beta(j) = nb;
                max_delta = std::max(max_delta, delta * delta);
            }
        }
        ++out.sweeps;
        if (settings.track_objective) {
            const double obj = std_objective(st, half_lambda);
            if (obj > prev + 1e-10 * std::max(1.0, std::abs(prev))) ++out.increases;
            prev = obj;
        }
        if (full) {
            active.clear();
            for (Eigen::Index j : usable) {
                if (st.beta(j) != 0.0) active.push_back(j);
            }
        }
        if (max_delta < settings.tol) {
            if (full) {
                out.converged = true;
                break;
            }
            full = true;
        } else {
            full = false;
        }
    }
    return out;
}

Eigen::VectorXd to_raw(const LassoProblem& p, const Scaling& s, const Eigen::VectorXd& beta) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (s.sx(j) > 0.0) b(j) = beta(j) * s.sy / s.sx(j);
    }
    if (s.center) b(p.intercept) = s.ybar - s.xbar.dot(b);
    return b;
}

// Coefficients with every penalized column at zero; the unpenalized ones fitted.
State null_state(const LassoProblem& p, const Scaling& s, const Settings& settings) {
    State st = start_state(p, s, Eigen::VectorXd());
    const Eigen::VectorXd h = half_lambdas(p, s, std::numeric_limits<double>::infinity());
    Settings quiet = settings;
    quiet.track_objective = false;
    descend(p, s, h, st, quiet);
    return st;
}

double std_rss(const State& st) { return std::max(0.0, 1.0 - st.beta.dot(st.c0) - st.beta.dot(st.grad)); }

double lambda_max_from(const LassoProblem& p, const Scaling& s, const State& null) {
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (s.sx(j) == 0.0 || !p.penalized(j)) continue;
        // Raw-scale gradient 2 x_j' W r = 2 s_y s_j G_j.
        double g = null.grad(j) * s.sy * s.sx(j);
        if (p.nonnegative) g = std::max(g, 0.0);
        lmax = std::max(lmax, 2.0 * std::abs(g));
    }
    return lmax;
}

int count_nonzero(const Eigen::VectorXd& b) {
    return static_cast<int>((b.array() != 0.0).count());
}

double bic_value(double rss, Eigen::Index m, int df) {
    const double md = static_cast<double>(m);
    if (!(rss > 0.0)) return -std::numeric_limits<double>::infinity();
    return md * std::log(rss / md) + df * std::log(md);
}

}  // namespace

void LassoProblem::validate() const {
    if (design.rows() == 0 || design.cols() == 0) throw ParameterError("lasso problem needs m > 0 and p >= 1");
    if (response.size() != design.rows()) throw ParameterError("lasso response length does not match design rows");
    if (weights.size() != 0) {
        if (weights.size() != design.rows()) throw ParameterError("lasso weights length does not match design rows");
        for (Eigen::Index r = 0; r < weights.size(); ++r) {
            if (!(weights(r) > 0.0) || !std::isfinite(weights(r))) {
                throw ParameterError("lasso weights must be positive and finite (row " + std::to_string(r) + ")");
            }
        }
    }
    if (!penalize.empty() && static_cast<Eigen::Index>(penalize.size()) != design.cols()) {
        throw ParameterError("penalize mask length does not match design columns");
    }
    if (intercept >= design.cols()) throw ParameterError("intercept column out of range");
    if (!response.allFinite()) throw ParameterError("lasso response contains non-finite values");
}

double weighted_rss(const LassoProblem& problem, const Eigen::VectorXd& b) {
    const Eigen::VectorXd r = problem.response - problem.design * b;
    if (problem.weights.size() == 0) return r.squaredNorm();
    return (problem.weights.array() * r.array().square()).sum();
}

double objective(const LassoProblem& problem, const Eigen::VectorXd& b, double lambda) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (problem.penalized(j)) pen += std::abs(b(j));
    }
    return weighted_rss(problem, b) + lambda * pen;
}

DescentResult coordinate_descent(const LassoProblem& problem, double lambda, const Eigen::VectorXd& start,
                                 const Settings& settings) {
    problem.validate();
    if (lambda < 0.0) throw ParameterError("lambda must be nonnegative");
    const Scaling s = prepare(problem);
    DescentResult out;
    if (s.sy == 0.0) {
        out.coefficients = Eigen::VectorXd::Zero(problem.cols());
        if (s.center) out.coefficients(problem.intercept) = s.ybar;
        out.converged = true;
        out.objective = objective(problem, out.coefficients, lambda);
        return out;
    }
    State st = start_state(problem, s, start);
    const SweepStats stats = descend(problem, s, half_lambdas(problem, s, lambda), st, settings);
    out.coefficients = to_raw(problem, s, st.beta);
    out.sweeps = stats.sweeps;
    out.converged = stats.converged;
    out.objective_increases = stats.increases;
    out.objective = objective(problem, out.coefficients, lambda);
    return out;
}

std::vector<double> lambda_grid(const LassoProblem& problem, int count, double ratio) {
    problem.validate();
    if (count < 2) throw ParameterError("lambda grid needs at least 2 points");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ParameterError("lambda grid ratio must lie in (0, 1)");
    const Scaling s = prepare(problem);
    if (s.sy == 0.0) throw DegenerateError("lambda grid: response has no variation to explain");
    const State null = null_state(problem, s, Settings{});
    if (std_rss(null) <= 1e-28) {
        throw DegenerateError("lambda grid: null-model residual is zero");
    }
    const double lmax = lambda_max_from(problem, s, null);
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        grid[static_cast<std::size_t>(k)] = lmax * std::pow(ratio, static_cast<double>(k) / (count - 1));
    }
    return grid;
}

double weighted_bic(const LassoProblem& problem, const Eigen::VectorXd& b) {
    return bic_value(weighted_rss(problem, b), problem.rows(), count_nonzero(b));
}

double kkt_violation(const LassoProblem& problem, const Eigen::VectorXd& b, double lambda) {
    problem.validate();
    const Scaling s = prepare(problem);
    if (s.sy == 0.0) return 0.0;
    const Eigen::VectorXd r = (problem.response - problem.design * b) / s.sy;
    const double wr_sum = s.w.dot(r);
    const Eigen::VectorXd h = half_lambdas(problem, s, lambda);
    double worst = 0.0;
    if (s.center) worst = std::abs(wr_sum) / std::sqrt(s.weight_sum);
    for (Eigen::Index j = 0; j < problem.cols(); ++j) {
        if (s.sx(j) == 0.0) continue;
        const auto x = problem.design.col(j);
        const double g = ((x.array() * s.w.array() * r.array()).sum() - s.xbar(j) * wr_sum) / s.sx(j);
        double v = 0.0;
        if (b(j) > 0.0) {
            v = std::abs(g - h(j));
        } else if (b(j) < 0.0) {
            v = std::abs(g + h(j));
        } else if (problem.nonnegative) {
            v = std::max(0.0, g - h(j));
        } else {
            v = std::max(0.0, std::abs(g) - h(j));
        }
        worst = std::max(worst, v);
    }
    return worst;
}

LassoFit fit_path_bic(const LassoProblem& problem, const Settings& settings) {
    problem.validate();
    const Scaling s = prepare(problem);
    LassoFit fit;
    const Eigen::Index m = problem.rows();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(problem.cols());
    fit.initial_objective = weighted_rss(problem, zero);

    State st = s.sy > 0.0 ? null_state(problem, s, settings) : State{};
    const bool flat = s.sy == 0.0 || std_rss(st) <= 1e-28;
    const double lmax = flat ? 0.0 : lambda_max_from(problem, s, st);
    if (flat || lmax == 0.0) {
        fit.coefficients = flat && s.sy == 0.0 ? zero : to_raw(problem, s, st.beta);
        if (s.sy == 0.0 && s.center) fit.coefficients(problem.intercept) = s.ybar;
        fit.degenerate = flat;
        if (flat) fit.warnings.push_back("response has no variation; intercept-only fit");
        fit.lambda = lmax;
        const double rss = weighted_rss(problem, fit.coefficients);
        const int df = count_nonzero(fit.coefficients);
        fit.path.push_back({lmax, bic_value(rss, m, df), rss, df, 0, true});
        if (settings.keep_path) fit.path_coefficients.push_back(fit.coefficients);
        fit.objective = objective(problem, fit.coefficients, lmax);
        return fit;
    }

    if (settings.grid_count < 2) throw ParameterError("lambda grid needs at least 2 points");
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_beta;
    int unconverged = 0;
    for (int k = 0; k < settings.grid_count; ++k) {
        const double lambda =
            lmax * std::pow(settings.grid_ratio, static_cast<double>(k) / (settings.grid_count - 1));
        const SweepStats stats = descend(problem, s, half_lambdas(problem, s, lambda), st, settings);
        fit.objective_increases += stats.increases;
        if (!stats.converged) ++unconverged;
        const double rss = s.sy * s.sy * std_rss(st);
        int df = static_cast<int>((st.beta.array() != 0.0).count());
        if (s.center) ++df;  // intercept
        const double bic = bic_value(rss, m, df);
        fit.path.push_back({lambda, bic, rss, df, stats.sweeps, stats.converged});
        if (settings.keep_path) fit.path_coefficients.push_back(to_raw(problem, s, st.beta));
        if (bic < best) {
            best = bic;
            best_beta = st.beta;
            fit.selected = fit.path.size() - 1;
        }
        if (df >= m - 1) break;  // saturated
    }
    if (unconverged > 0) {
        fit.warnings.push_back("coordinate descent hit max_sweeps at " + std::to_string(unconverged) +
                               " grid points");
    }
    if (best_beta.size() == 0) best_beta = st.beta;
    fit.lambda = fit.path[fit.selected].lambda;
    fit.coefficients = to_raw(problem, s, best_beta);
    fit.objective = objective(problem, fit.coefficients, fit.lambda);
    return fit;
}

}  // namespace wpf::lasso
