#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace gensep {

enum class FamilyKind { gaussian, binomial, multinomial };

struct GlmFamily {
    FamilyKind kind = FamilyKind::gaussian;
    int classes = 1;  ///< L for multinomial, 1 otherwise

    static GlmFamily gaussian() { return {FamilyKind::gaussian, 1}; }
    static GlmFamily binomial() { return {FamilyKind::binomial, 1}; }
    /// Throws ArgumentError when classes < 2.
    static GlmFamily multinomial(int classes);

    /// Number of linear predictors (coefficient columns).
    int outputs() const noexcept { return kind == FamilyKind::multinomial ? classes : 1; }
};

struct LassoOptions {
    double tolerance = 1e-7;  ///< max absolute coefficient change ending a solve
    int max_sweeps = 10000;
};

/// Solution path of the weighted lasso-penalized GLM
///
///     (1/W) * sum_i w_i * loss_i(intercept + x_i' slopes) + lambda * |slopes|_1
///
/// with W = sum_i w_i. The gaussian loss is half the squared residual, the
/// binomial and multinomial losses are negative log-likelihoods. Intercepts
/// are never penalized. For multinomial fits each slopes matrix is p x L
/// (symmetric parametrization), otherwise p x 1.
struct LassoPath {
    std::vector<double> lambdas;
    std::vector<Eigen::VectorXd> intercepts;
    std::vector<Eigen::MatrixXd> slopes;
    std::vector<double> log_likelihoods;  ///< weighted, at each lambda
    std::vector<int> df;                  ///< nonzero slope rows (any class)

    std::size_t size() const noexcept { return lambdas.size(); }
};

/// Smallest lambda at which every slope is zero.
double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                  const Eigen::VectorXd& weights);

/// `count` points log-spaced from `top` down to ratio * top.
std::vector<double> lambda_grid(double top, int count = 50, double ratio = 0.01);

/// Fits the path with warm starts. y holds the response (0/1 for binomial,
/// class labels 0..L-1 for multinomial). Columns of x should already be
/// standardized; the fit centers internally for the intercept.
///
/// Throws ArgumentError on an empty or non-descending grid or bad weights
/// and ConvergenceError if a solve exceeds max_sweeps.
LassoPath fit_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                   const Eigen::VectorXd& weights, std::span<const double> lambdas,
                   const LassoOptions& options = {});

/// Weighted log-likelihood of a coefficient set. Gaussian uses the profiled
/// variance sum(w r^2) / W.
double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                      const Eigen::VectorXd& weights, const Eigen::VectorXd& intercept,
                      const Eigen::MatrixXd& slopes);

/// Value of the penalized objective above.
double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                           const Eigen::VectorXd& weights, const Eigen::VectorXd& intercept,
                           const Eigen::MatrixXd& slopes, double lambda);

/// Weighted score (1/W) X' W (y - mean), one column per linear predictor.
/// At a solution |score| equals lambda on active coordinates and is at most
/// lambda elsewhere.
Eigen::MatrixXd weighted_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                               const Eigen::VectorXd& weights, const Eigen::VectorXd& intercept,
                               const Eigen::MatrixXd& slopes);

/// -2 loglik + df log(n) + 2 gamma df log(p)
double ebic(double log_likelihood, int df, double n, double p, double gamma);

/// Index of the EBIC minimizer; ties go to the larger lambda.
std::size_t select_ebic(const LassoPath& path, double n, double p, double gamma);

}  // namespace gensep
