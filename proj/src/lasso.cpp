#include "gensep/lasso.hpp"

#include "gensep/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace gensep {

namespace {

constexpr double kCurvatureFloor = 1e-5;
constexpr int kMaxOuter = 1000;

double soft_threshold(double u, double lambda) {
    if (u > lambda) return u - lambda;
    if (u < -lambda) return u + lambda;
    return 0.0;
}

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                  const Eigen::VectorXd& weights) {
    if (x.rows() != y.size() || x.rows() != weights.size()) {
        throw ArgumentError("lasso: x, y and weights must have the same number of rows");
    }
    if (x.rows() == 0) throw ArgumentError("lasso: no observations");
    if ((weights.array() < 0).any() || !weights.allFinite()) {
        throw ArgumentError("lasso: weights must be finite and nonnegative");
    }
    if (weights.sum() <= 0) throw ArgumentError("lasso: weights are all zero");
    if (!x.allFinite() || !y.allFinite()) throw ArgumentError("lasso: non-finite input");
    if (family.kind == FamilyKind::binomial) {
        if (((y.array() != 0.0) && (y.array() != 1.0)).any()) {
            throw ArgumentError("lasso: binomial response must be 0/1");
        }
    } else if (family.kind == FamilyKind::multinomial) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double v = y[i];
            if (v != std::floor(v) || v < 0 || v >= family.classes) {
                throw ArgumentError("lasso: multinomial label out of range");
            }
        }
    }
}

/// One-hot response, n x outputs. Gaussian and binomial keep y as is.
Eigen::MatrixXd response_matrix(const Eigen::VectorXd& y, GlmFamily family) {
    if (family.kind != FamilyKind::multinomial) return y;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(y.size(), family.classes);
    for (Eigen::Index i = 0; i < y.size(); ++i) out(i, static_cast<Eigen::Index>(y[i])) = 1.0;
    return out;
}

/// Row-wise softmax of linear predictors.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& eta) {
    Eigen::MatrixXd p(eta.rows(), eta.cols());
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        const double top = eta.row(i).maxCoeff();
        double total = 0.0;
        for (Eigen::Index k = 0; k < eta.cols(); ++k) {
            p(i, k) = std::exp(eta(i, k) - top);
            total += p(i, k);
        }
        p.row(i) /= total;
    }
    return p;
}

Eigen::MatrixXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& intercept,
                                 const Eigen::MatrixXd& slopes) {
    Eigen::MatrixXd eta = x * slopes;
    eta.rowwise() += intercept.transpose();
    return eta;
}

/// Fitted means: identity, logistic, or softmax of the linear predictor.
Eigen::MatrixXd fitted_mean(const Eigen::MatrixXd& eta, GlmFamily family) {
    switch (family.kind) {
        case FamilyKind::gaussian: return eta;
        case FamilyKind::binomial: return eta.unaryExpr([](double v) { return sigmoid(v); });
        case FamilyKind::multinomial: return softmax(eta);
    }
    return eta;
}

int count_df(const Eigen::MatrixXd& slopes) {
    int df = 0;
    for (Eigen::Index j = 0; j < slopes.rows(); ++j) {
        if ((slopes.row(j).array() != 0.0).any()) ++df;
    }
    return df;
}

/// Coordinate descent on (1/2) b'Gb - c'b + lambda |b|_1 with the gradient
/// c - Gb kept in `grad`.
void cd_covariance(const Eigen::MatrixXd& gram, double lambda, Eigen::VectorXd& beta, Eigen::VectorXd& grad,
                   const LassoOptions& opt) {
    const Eigen::Index p = beta.size();
    double max_change = 0.0;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double gjj = gram(j, j);
            if (gjj <= 0.0) continue;
            const double updated = soft_threshold(grad[j] + gjj * beta[j], lambda) / gjj;
            const double delta = updated - beta[j];
            if (delta == 0.0) continue;
            beta[j] = updated;
            grad.noalias() -= gram.col(j) * delta;
            max_change = std::max(max_change, std::abs(delta));
        }
        if (max_change < opt.tolerance) return;
    }
    throw ConvergenceError("lasso: coordinate descent did not converge in " + std::to_string(opt.max_sweeps) +
                               " sweeps (last change " + std::to_string(max_change) + ")",
                           max_change);
}

/// Weighted least-squares lasso subproblem
///     (1/2W) sum v_i (z_i - b0 - x_i'b)^2 + lambda |b|_1
/// solved by naive coordinate descent with active-set cycling. Updates b0
/// and beta in place.
void cd_naive(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& v, double total_w,
              double lambda, double& b0, Eigen::Ref<Eigen::VectorXd> beta, const LassoOptions& opt) {
    const Eigen::Index p = x.cols();
    const double vsum = v.sum();
    Eigen::VectorXd r = z - x * beta;
    r.array() -= b0;
    Eigen::VectorXd xv2(p);
    for (Eigen::Index j = 0; j < p; ++j) xv2[j] = (x.col(j).array().square() * v.array()).sum() / total_w;

    auto update_intercept = [&] {
        const double d0 = v.dot(r) / vsum;
        b0 += d0;
        r.array() -= d0;
        return std::abs(d0);
    };
    auto update = [&](Eigen::Index j) {
        if (xv2[j] <= 0.0) return 0.0;
        const double g = (x.col(j).array() * v.array() * r.array()).sum() / total_w;
        const double updated = soft_threshold(g + xv2[j] * beta[j], lambda) / xv2[j];
        const double delta = updated - beta[j];
        if (delta == 0.0) return 0.0;
        beta[j] = updated;
        r.noalias() -= x.col(j) * delta;
        return std::abs(delta);
    };

    int sweeps = 0;
    double max_change = 0.0;
    for (;;) {
        // full pass over every coordinate
        max_change = update_intercept();
        for (Eigen::Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
        if (++sweeps > opt.max_sweeps) break;
        if (max_change < opt.tolerance) return;
        // converge on the active set before the next full pass
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (beta[j] != 0.0) active.push_back(j);
        }
        for (;;) {
            double change = update_intercept();
            for (auto j : active) change = std::max(change, update(j));
            if (++sweeps > opt.max_sweeps) break;
            if (change < opt.tolerance) break;
        }
        if (sweeps > opt.max_sweeps) break;
    }
    throw ConvergenceError("lasso: coordinate descent did not converge in " + std::to_string(opt.max_sweeps) +
                               " sweeps (last change " + std::to_string(max_change) + ")",
                           max_change);
}

struct Coefs {
    Eigen::VectorXd intercept;
    Eigen::MatrixXd slopes;
};

double objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family, const Eigen::VectorXd& w,
                 const Coefs& c, double lambda) {
    return penalized_objective(x, y, family, w, c.intercept, c.slopes, lambda);
}

/// Proximal Newton for binomial and multinomial fits; the multinomial case
/// cycles over classes, each with its own quadratic model.
void solve_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& ymat, GlmFamily family,
               const Eigen::VectorXd& w, double lambda, Coefs& coef, const LassoOptions& opt) {
    const double total_w = w.sum();
    const int outputs = family.outputs();
    const Eigen::Index n = x.rows();
    double last_change = std::numeric_limits<double>::infinity();
    double current = objective(x, y, family, w, coef, lambda);

    for (int outer = 0; outer < kMaxOuter; ++outer) {
        double change = 0.0;
        for (int k = 0; k < outputs; ++k) {
            const Eigen::MatrixXd eta = linear_predictor(x, coef.intercept, coef.slopes);
            const Eigen::MatrixXd mu = fitted_mean(eta, family);
            Eigen::VectorXd v(n), z(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double pk = mu(i, k);
                const double q = std::max(pk * (1.0 - pk), kCurvatureFloor);
                v[i] = w[i] * q;
                z[i] = eta(i, k) + (ymat(i, k) - pk) / q;
            }
            double b0 = coef.intercept[k];
            Eigen::VectorXd candidate = coef.slopes.col(k);
            cd_naive(x, z, v, total_w, lambda, b0, candidate, opt);

            Coefs trial = coef;
            trial.intercept[k] = b0;
            trial.slopes.col(k) = candidate;
            double trial_obj = objective(x, y, family, w, trial, lambda);
            // damp the Newton step if the full step increases the objective
            double step = 1.0;
            while (!(trial_obj <= current + 1e-12 * std::max(1.0, std::abs(current))) && step > 1e-10) {
                step *= 0.5;
                trial.intercept[k] = coef.intercept[k] + step * (b0 - coef.intercept[k]);
                trial.slopes.col(k) = coef.slopes.col(k) + step * (candidate - coef.slopes.col(k));
                trial_obj = objective(x, y, family, w, trial, lambda);
            }
            change = std::max(change, std::abs(trial.intercept[k] - coef.intercept[k]));
            change = std::max(change, (trial.slopes.col(k) - coef.slopes.col(k)).cwiseAbs().maxCoeff());
            coef = std::move(trial);
            current = trial_obj;
        }
        if (family.kind == FamilyKind::multinomial) coef.intercept.array() -= coef.intercept.mean();
        last_change = change;
        if (change < opt.tolerance) return;
    }
    throw ConvergenceError("lasso: Newton iterations did not converge (last change " +
                               std::to_string(last_change) + ")",
                           last_change);
}

}  // namespace

GlmFamily GlmFamily::multinomial(int classes) {
    if (classes < 2) throw ArgumentError("multinomial family needs at least 2 classes");
    return {FamilyKind::multinomial, classes};
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                  const Eigen::VectorXd& weights) {
    check_inputs(x, y, family, weights);
    const double total_w = weights.sum();
    const Eigen::MatrixXd ymat = response_matrix(y, family);
    const Eigen::RowVectorXd ybar = (weights.transpose() * ymat) / total_w;
    const Eigen::MatrixXd resid = ymat.rowwise() - ybar;
    const Eigen::MatrixXd score = x.transpose() * (weights.asDiagonal() * resid) / total_w;
    return x.cols() == 0 ? 0.0 : score.cwiseAbs().maxCoeff();
}

std::vector<double> lambda_grid(double top, int count, double ratio) {
    if (!(top > 0.0) || count < 1 || !(ratio > 0.0 && ratio < 1.0)) {
        throw ArgumentError("lambda_grid: need top > 0, count >= 1 and ratio in (0,1)");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    const double step = std::log(ratio) / (count - 1);
    for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = top * std::exp(step * i);
    return grid;
}

LassoPath fit_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                   const Eigen::VectorXd& weights, std::span<const double> lambdas, const LassoOptions& options) {
    check_inputs(x, y, family, weights);
    if (lambdas.empty()) throw ArgumentError("lasso: lambda grid is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
            throw ArgumentError("lasso: lambda values must be finite and nonnegative");
        }
        if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
            throw ArgumentError("lasso: lambda grid must be strictly descending");
        }
    }

    const Eigen::Index p = x.cols();
    const int outputs = family.outputs();
    const double total_w = weights.sum();
    const Eigen::MatrixXd ymat = response_matrix(y, family);
    const Eigen::RowVectorXd ybar = (weights.transpose() * ymat) / total_w;

    LassoPath path;
    path.lambdas.assign(lambdas.begin(), lambdas.end());

    if (family.kind == FamilyKind::gaussian) {
        const Eigen::RowVectorXd xbar = (weights.transpose() * x) / total_w;
        const Eigen::MatrixXd xc = x.rowwise() - xbar;
        const Eigen::VectorXd yc = y.array() - ybar[0];
        const Eigen::MatrixXd wxc = weights.asDiagonal() * xc;
        const Eigen::MatrixXd gram = (xc.transpose() * wxc) / total_w;
        const Eigen::VectorXd cross = (wxc.transpose() * yc) / total_w;
        const double syy = weights.dot(yc.cwiseProduct(yc)) / total_w;

        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd grad = cross;
        for (double lambda : path.lambdas) {
            cd_covariance(gram, lambda, beta, grad, options);
            const double rss_mean = std::max(syy - 2.0 * beta.dot(cross) + beta.dot(gram * beta), 0.0);
            const double sigma2 = std::max(rss_mean, std::numeric_limits<double>::min());
            Eigen::VectorXd intercept(1);
            intercept[0] = ybar[0] - xbar.dot(beta);
            path.intercepts.push_back(intercept);
            path.slopes.push_back(beta);
            path.log_likelihoods.push_back(-0.5 * total_w * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0));
            path.df.push_back(count_df(beta));
        }
        return path;
    }

    Coefs coef;
    coef.intercept.resize(outputs);
    if (family.kind == FamilyKind::binomial) {
        if (ybar[0] <= 0.0 || ybar[0] >= 1.0) throw NumericalError("lasso: binomial response has a single class");
        coef.intercept[0] = std::log(ybar[0] / (1.0 - ybar[0]));
    } else {
        for (int k = 0; k < outputs; ++k) {
            if (ybar[k] <= 0.0) {
                throw NumericalError("lasso: multinomial class " + std::to_string(k) + " has no observations");
            }
            coef.intercept[k] = std::log(ybar[k]);
        }
        coef.intercept.array() -= coef.intercept.mean();
    }
    coef.slopes = Eigen::MatrixXd::Zero(p, outputs);

    for (double lambda : path.lambdas) {
        solve_glm(x, y, ymat, family, weights, lambda, coef, options);
        path.intercepts.push_back(coef.intercept);
        path.slopes.push_back(coef.slopes);
        path.log_likelihoods.push_back(log_likelihood(x, y, family, weights, coef.intercept, coef.slopes));
        path.df.push_back(count_df(coef.slopes));
    }
    return path;
}

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                      const Eigen::VectorXd& weights, const Eigen::VectorXd& intercept,
                      const Eigen::MatrixXd& slopes) {
    const Eigen::MatrixXd eta = linear_predictor(x, intercept, slopes);
    const double total_w = weights.sum();
    switch (family.kind) {
        case FamilyKind::gaussian: {
            const Eigen::VectorXd r = y - eta.col(0);
            const double sigma2 = std::max(weights.dot(r.cwiseProduct(r)) / total_w, std::numeric_limits<double>::min());
            return -0.5 * total_w * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
        }
        case FamilyKind::binomial: {
            double ll = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double e = eta(i, 0);
                // log(1 + exp(e)) computed stably
                const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
                ll += weights[i] * (y[i] * e - log1pexp);
            }
            return ll;
        }
        case FamilyKind::multinomial: {
            double ll = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double top = eta.row(i).maxCoeff();
                const double lse = top + std::log((eta.row(i).array() - top).exp().sum());
                ll += weights[i] * (eta(i, static_cast<Eigen::Index>(y[i])) - lse);
            }
            return ll;
        }
    }
    return 0.0;
}

double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                           const Eigen::VectorXd& weights, const Eigen::VectorXd& intercept,
                           const Eigen::MatrixXd& slopes, double lambda) {
    const double total_w = weights.sum();
    const double penalty = lambda * slopes.cwiseAbs().sum();
    if (family.kind == FamilyKind::gaussian) {
        const Eigen::VectorXd r = y - linear_predictor(x, intercept, slopes).col(0);
        return 0.5 * weights.dot(r.cwiseProduct(r)) / total_w + penalty;
    }
    return -log_likelihood(x, y, family, weights, intercept, slopes) / total_w + penalty;
}

Eigen::MatrixXd weighted_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
                               const Eigen::VectorXd& weights, const Eigen::VectorXd& intercept,
                               const Eigen::MatrixXd& slopes) {
    const Eigen::MatrixXd mu = fitted_mean(linear_predictor(x, intercept, slopes), family);
    const Eigen::MatrixXd resid = response_matrix(y, family) - mu;
    return x.transpose() * (weights.asDiagonal() * resid) / weights.sum();
}

double ebic(double log_likelihood, int df, double n, double p, double gamma) {
    return -2.0 * log_likelihood + df * std::log(n) + 2.0 * gamma * df * std::log(p);
}

std::size_t select_ebic(const LassoPath& path, double n, double p, double gamma) {
    if (path.size() == 0) throw ArgumentError("select_ebic: empty path");
    std::size_t best = 0;
    double best_value = ebic(path.log_likelihoods[0], path.df[0], n, p, gamma);
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double value = ebic(path.log_likelihoods[i], path.df[i], n, p, gamma);
        // strict improvement only: equal values keep the earlier, larger lambda
        if (value < best_value) {
            best = i;
            best_value = value;
        }
    }
    return best;
}

}  // namespace gensep
