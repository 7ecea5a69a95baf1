#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace wpf::lasso {

/// Weighted lasso problem: minimize sum_r w_r (y_r - x_r'b)^2 + lambda * sum_{j penalized} |b_j|,
/// optionally subject to b >= 0. Design and response are referenced, not copied.
struct LassoProblem {
    const Eigen::MatrixXd& design;
    const Eigen::VectorXd& response;
    Eigen::VectorXd weights;     // empty = all ones
    bool nonnegative = false;
    std::vector<bool> penalize;  // empty = every column penalized
    /// Column holding the constant 1. For problems without the sign constraint
    /// the fit is centered and this coefficient recovered afterwards.
    int intercept = -1;

    /// Throws ParameterError on shape mismatch, non-positive or non-finite weights.
    void validate() const;
    [[nodiscard]] Eigen::Index rows() const { return design.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return design.cols(); }
    [[nodiscard]] double weight(Eigen::Index r) const { return weights.size() ? weights(r) : 1.0; }
    [[nodiscard]] bool penalized(Eigen::Index j) const {
        return penalize.empty() || penalize[static_cast<std::size_t>(j)];
    }
};

struct Settings {
    int grid_count = 100;
    double grid_ratio = 1e-4;
    double tol = 1e-7;  // max squared standardized coefficient change per sweep
    int max_sweeps = 10000;
    bool track_objective = true;
    bool keep_path = false;  // store coefficients for every lambda
};

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

struct DescentResult {
    Eigen::VectorXd coefficients;  // raw column scale
    double objective = 0.0;
    int sweeps = 0;
    bool converged = false;
    int objective_increases = 0;  // sweeps whose objective rose beyond rounding
};

/// Raw-scale objective: weighted RSS + lambda * ||b_penalized||_1.
double objective(const LassoProblem& problem, const Eigen::VectorXd& b, double lambda);

/// Weighted residual sum of squares.
double weighted_rss(const LassoProblem& problem, const Eigen::VectorXd& b);

/// Cyclic coordinate descent at one lambda, warm-started from `start`
/// (raw scale, empty = zeros).
DescentResult coordinate_descent(const LassoProblem& problem, double lambda,
                                 const Eigen::VectorXd& start, const Settings& settings = {});

/// Descending log-spaced grid from lambda_max down to lambda_max * ratio.
/// Throws DegenerateError when the null-model residual is zero.
std::vector<double> lambda_grid(const LassoProblem& problem, int count, double ratio);

/// m log(RSS_w / m) + df log m with df = nonzero coefficients. Returns -inf
/// when RSS_w is zero.
double weighted_bic(const LassoProblem& problem, const Eigen::VectorXd& b);

/// Largest violation of the optimality conditions, measured on the
/// standardized scale (unit weighted column norms, unit weighted response norm).
double kkt_violation(const LassoProblem& problem, const Eigen::VectorXd& b, double lambda);

struct PathPoint {
    double lambda = 0.0;
    double bic = 0.0;
    double rss = 0.0;
    int df = 0;
    int sweeps = 0;
    bool converged = true;
};

struct LassoFit {
    std::vector<PathPoint> path;
    std::vector<Eigen::VectorXd> path_coefficients;  // only with keep_path
    std::size_t selected = 0;
    double lambda = 0.0;
    Eigen::VectorXd coefficients;
    double objective = 0.0;
    double initial_objective = 0.0;  // at b = 0
    int objective_increases = 0;
    bool degenerate = false;  // zero response variation: intercept-only fit
    std::vector<std::string> warnings;
};

/// Warm-started path over the grid; lambda chosen by minimal BIC, ties to
/// the larger lambda.
LassoFit fit_path_bic(const LassoProblem& problem, const Settings& settings = {});

}  // namespace wpf::lasso
