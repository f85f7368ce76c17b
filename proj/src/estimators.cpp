#include "gensep/estimators.hpp"

#include "gensep/error.hpp"

#include <json.hpp>

#include <cmath>
#include <map>

namespace gensep {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kGradientTolerance = 1e-8;
constexpr int kMaxNewton = 100;

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
double softplus(double eta) {
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

double weighted_loglik(const MatrixXd& x, const VectorXd& s, const VectorXd& c, const VectorXd& beta) {
    const VectorXd eta = x * beta;
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) ll += c(i) * (s(i) * eta(i) - softplus(eta(i)));
    return ll;
}

void require_population_measured(const StackedDataset& data, const std::vector<std::string>& w) {
    for (const auto& name : w) {
        const auto& spec = data.specs()[data.covariate_index(name)];
        if (!spec.measured_in_population) {
            throw ArgumentError("'" + name + "' is not measured in the population and cannot enter the sampling model");
        }
    }
}

struct ArmMeans {
    double treated = 0.0;
    double control = 0.0;
};

/// Hajek means of `values` in each arm with weights pi*p*T and pi*(1-p)*(1-T).
ArmMeans hajek_means(const std::vector<int>& t, const VectorXd& values, const VectorXd& pi,
                     const std::vector<double>& p) {
    double num1 = 0.0, den1 = 0.0, num0 = 0.0, den0 = 0.0;
    for (Index i = 0; i < values.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (t[k] == 1) {
            const double w = pi(i) * p[k];
            num1 += w * values(i);
            den1 += w;
        } else {
            const double w = pi(i) * (1.0 - p[k]);
            num0 += w * values(i);
            den0 += w;
        }
    }
    if (!(den1 > 0.0)) throw NumericalError("the treated arm has zero total weight");
    if (!(den0 > 0.0)) throw NumericalError("the control arm has zero total weight");
    return {num1 / den1, num0 / den0};
}

void check_weight_inputs(const StackedDataset& data, const VectorXd& pi, const std::vector<double>& p) {
    const std::size_t n = data.n_experiment();
    if (static_cast<std::size_t>(pi.size()) != n) throw ArgumentError("one weight per experiment row is required");
    if (p.size() != n) throw ArgumentError("one treatment probability per experiment row is required");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(p[i] > 0.0 && p[i] < 1.0)) throw ArgumentError("treatment probabilities must lie in (0, 1)");
        if (!(pi(static_cast<Index>(i)) > 0.0) || !std::isfinite(pi(static_cast<Index>(i)))) {
            throw ArgumentError("generalization weights must be positive and finite");
        }
    }
}

VectorXd experiment_outcomes(const StackedDataset& data) {
    VectorXd y(static_cast<Index>(data.n_experiment()));
    for (std::size_t i = 0; i < data.n_experiment(); ++i) y(static_cast<Index>(i)) = data.y()[i];
    return y;
}

double mean_difference(const VectorXd& a, const VectorXd& b) {
    double sum = 0.0;
    for (Index i = 0; i < a.size(); ++i) sum += a(i) - b(i);
    return sum / static_cast<double>(a.size());
}

}  // namespace

Eigen::MatrixXd covariate_design(const StackedDataset& data, const std::vector<std::string>& w, std::size_t first,
                                 std::size_t count, std::vector<std::string>* names) {
    std::vector<std::pair<std::size_t, int>> columns;  // (covariate, level or -1)
    std::vector<std::string> labels;
    for (const auto& name : w) {
        const std::size_t j = data.covariate_index(name);
        const auto& spec = data.specs()[j];
        if (spec.kind == VariableKind::continuous) {
            columns.emplace_back(j, -1);
            labels.push_back(name);
        } else {
            for (int level = 1; level < spec.level_count; ++level) {
                columns.emplace_back(j, level);
                labels.push_back(name + "=" + std::to_string(level));
            }
        }
    }
    MatrixXd x(static_cast<Index>(count), static_cast<Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto [j, level] = columns[c];
        for (std::size_t r = 0; r < count; ++r) {
            const double v = data.covariates()(static_cast<Index>(first + r), static_cast<Index>(j));
            if (std::isnan(v)) throw ArgumentError("'" + data.specs()[j].name + "' is missing on a requested row");
            x(static_cast<Index>(r), static_cast<Index>(c)) = level < 0 ? v : (static_cast<int>(v) == level ? 1.0 : 0.0);
        }
    }
    if (names) *names = std::move(labels);
    return x;
}

SamplingModel fit_sampling_model(const StackedDataset& data, const std::vector<std::string>& w) {
    require_population_measured(data, w);
    const std::size_t n = data.n_experiment(), m = data.m_population(), rows = data.rows();
    if (n == 0 || m == 0) throw ArgumentError("the sampling model needs both experiment and population rows");

    SamplingModel model;
    model.covariates = w;
    model.n_experiment = n;
    std::vector<std::string> names;
    const MatrixXd z = covariate_design(data, w, 0, rows, &names);
    MatrixXd x(static_cast<Index>(rows), z.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(z.cols()) = z;
    model.design_names.push_back("(Intercept)");
    model.design_names.insert(model.design_names.end(), names.begin(), names.end());

    const double pop_weight = static_cast<double>(m) / (data.population_size() - static_cast<double>(n));
    VectorXd c(static_cast<Index>(rows)), s(static_cast<Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
        const bool exp = data.is_experiment(i);
        c(static_cast<Index>(i)) = exp ? 1.0 : pop_weight;
        s(static_cast<Index>(i)) = exp ? 1.0 : 0.0;
    }
    const double total = c.sum();

    VectorXd beta = VectorXd::Zero(x.cols());
    const double share = static_cast<double>(n) / total;
    beta(0) = std::log(share / (1.0 - share));

    double ll = weighted_loglik(x, s, c, beta);
    bool converged = false;
    int iter = 0;
    for (; iter < kMaxNewton; ++iter) {
        const VectorXd eta = x * beta;
        VectorXd p(eta.size()), v(eta.size());
        for (Index i = 0; i < eta.size(); ++i) {
            p(i) = sigmoid(eta(i));
            v(i) = c(i) * p(i) * (1.0 - p(i));
        }
        const VectorXd grad = x.transpose() * (c.array() * (s - p).array()).matrix();
        if (grad.norm() / total < kGradientTolerance) {
            converged = true;
            break;
        }
        if (eta.cwiseAbs().maxCoeff() > 30.0) break;
        const MatrixXd hess = x.transpose() * v.asDiagonal() * x;
        Eigen::ColPivHouseholderQR<MatrixXd> qr(hess);
        if (qr.rank() < hess.cols()) {
            throw NumericalError("sampling model design is rank deficient; drop a collinear covariate from the set");
        }
        const VectorXd step = qr.solve(grad);
        double t = 1.0;
        VectorXd trial = beta + step;
        double trial_ll = weighted_loglik(x, s, c, trial);
        for (int h = 0; h < 40 && !(trial_ll >= ll - 1e-12 * std::abs(ll)); ++h) {
            t *= 0.5;
            trial = beta + t * step;
            trial_ll = weighted_loglik(x, s, c, trial);
        }
        beta = trial;
        ll = trial_ll;
    }
    model.iterations = iter;

    VectorXd prob = (x * beta).unaryExpr([](double e) { return sigmoid(e); });
    const double lo = prob.minCoeff(), hi = prob.maxCoeff();
    if (!converged) {
        if (lo < 1e-10 || hi > 1.0 - 1e-10) {
            throw NumericalError("sampling model shows perfect separation between experiment and population; "
                                 "try a smaller separating set");
        }
        throw ConvergenceError("sampling model did not converge", 0.0);
    }
    if (!(lo > 0.0 && hi < 1.0) || !beta.allFinite()) {
        throw NumericalError("sampling model fitted probabilities reached 0 or 1; try a smaller separating set");
    }
    model.coefficients = beta;
    model.probability = std::move(prob);
    model.case_weights = std::move(c);
    return model;
}

Eigen::VectorXd compute_weights(const SamplingModel& model, std::optional<double> cap) {
    if (cap && !(*cap > 0.0)) throw ArgumentError("weight cap must be positive");
    const auto& p1 = model.probability;
    const auto& c = model.case_weights;
    double num = 0.0;
    for (Index i = 0; i < p1.size(); ++i) num += c(i) * (1.0 - p1(i));
    const double pr_s0 = num / c.sum();
    VectorXd pi(static_cast<Index>(model.n_experiment));
    for (Index i = 0; i < pi.size(); ++i) {
        pi(i) = 1.0 / p1(i) * (1.0 - p1(i)) / pr_s0;
        if (cap) pi(i) = std::min(pi(i), *cap);
    }
    return pi;
}

std::vector<double> treatment_probabilities(const StackedDataset& data, std::optional<double> constant) {
    const std::size_t n = data.n_experiment();
    std::vector<double> p(n);
    const bool stratified = !data.strata.empty();

    if (!data.propensity.empty()) {
        std::map<std::string, double> by_stratum;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = data.propensity[i];
            if (stratified) {
                auto [it, fresh] = by_stratum.emplace(data.strata[i], p[i]);
                if (!fresh && it->second != p[i]) {
                    throw ArgumentError("treatment probability varies within stratum '" + data.strata[i] + "'");
                }
            }
        }
    } else if (stratified) {
        std::map<std::string, std::pair<double, double>> counts;  // treated, total
        for (std::size_t i = 0; i < n; ++i) {
            auto& [treated, total] = counts[data.strata[i]];
            treated += data.t()[i];
            total += 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& [treated, total] = counts[data.strata[i]];
            p[i] = treated / total;
            if (!(p[i] > 0.0 && p[i] < 1.0)) {
                throw ArgumentError("stratum '" + data.strata[i] + "' has only one treatment arm");
            }
        }
    } else {
        double value = 0.0;
        if (constant) {
            value = *constant;
        } else {
            for (std::size_t i = 0; i < n; ++i) value += data.t()[i];
            value /= static_cast<double>(n);
        }
        std::fill(p.begin(), p.end(), value);
    }
    for (double v : p) {
        if (!(v > 0.0 && v < 1.0)) throw ArgumentError("treatment probabilities must lie in (0, 1)");
    }
    return p;
}

const char* to_string(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::ipw: return "ipw";
        case EstimatorKind::outcome_model: return "outcome_model";
        case EstimatorKind::aipw: return "aipw";
        case EstimatorKind::sate_dim: return "sate_dim";
    }
    return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
    if (name == "ipw") return EstimatorKind::ipw;
    if (name == "outcome_model") return EstimatorKind::outcome_model;
    if (name == "aipw") return EstimatorKind::aipw;
    if (name == "sate_dim" || name == "naive") return EstimatorKind::sate_dim;
    throw ArgumentError("unknown estimator '" + name + "' (expected ipw, outcome_model, aipw, sate_dim or naive)");
}

PateEstimate ipw_pate(const StackedDataset& data, const Eigen::VectorXd& pi, const std::vector<double>& p) {
    check_weight_inputs(data, pi, p);
    const ArmMeans arms = hajek_means(data.t(), experiment_outcomes(data), pi, p);
    PateEstimate est;
    est.estimator = EstimatorKind::ipw;
    est.point = arms.treated - arms.control;
    est.n_used = data.n_experiment();
    est.m_used = data.m_population();
    return est;
}

PateEstimate sate_dim(const StackedDataset& data) {
    const VectorXd ones = VectorXd::Ones(static_cast<Index>(data.n_experiment()));
    const std::vector<double> half(data.n_experiment(), 0.5);
    PateEstimate est = ipw_pate(data, ones, half);
    est.estimator = EstimatorKind::sate_dim;
    est.m_used = 0;
    return est;
}

OutcomePredictions fit_outcome_model(const StackedDataset& data, const std::vector<std::string>& w) {
    require_population_measured(data, w);
    const std::size_t n = data.n_experiment(), m = data.m_population();
    std::vector<std::string> names;
    const MatrixXd z_exp = covariate_design(data, w, 0, n, &names);
    const MatrixXd z_pop = covariate_design(data, w, n, m);
    const Index d = z_exp.cols() + 1;
    names.insert(names.begin(), "(Intercept)");

    auto with_intercept = [](const MatrixXd& z) {
        MatrixXd x(z.rows(), z.cols() + 1);
        x.col(0).setOnes();
        x.rightCols(z.cols()) = z;
        return x;
    };
    const MatrixXd x_exp = with_intercept(z_exp);
    const MatrixXd x_pop = with_intercept(z_pop);

    OutcomePredictions out;
    for (int arm = 1; arm >= 0; --arm) {
        std::vector<Index> rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (data.t()[i] == arm) rows.push_back(static_cast<Index>(i));
        }
        const char* label = arm == 1 ? "treated" : "control";
        if (static_cast<Index>(rows.size()) < d + 1) {
            throw ArgumentError(std::string("the ") + label + " arm has " + std::to_string(rows.size()) +
                                " rows, too few for an outcome model with " + std::to_string(d) + " coefficients");
        }
        MatrixXd xa(static_cast<Index>(rows.size()), d);
        VectorXd ya(static_cast<Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            xa.row(static_cast<Index>(r)) = x_exp.row(rows[r]);
            ya(static_cast<Index>(r)) = data.y()[static_cast<std::size_t>(rows[r])];
        }
        Eigen::ColPivHouseholderQR<MatrixXd> qr(xa);
        if (qr.rank() < d) {
            std::string dropped;
            for (Index k = qr.rank(); k < d; ++k) {
                if (!dropped.empty()) dropped += ", ";
                dropped += names[static_cast<std::size_t>(qr.colsPermutation().indices()(k))];
            }
            throw NumericalError(std::string("outcome model design in the ") + label +
                                 " arm is rank deficient; collinear columns: " + dropped);
        }
        const VectorXd beta = qr.solve(ya);
        if (arm == 1) {
            out.treated_experiment = x_exp * beta;
            out.treated_population = x_pop * beta;
        } else {
            out.control_experiment = x_exp * beta;
            out.control_population = x_pop * beta;
        }
    }
    return out;
}

PateEstimate outcome_model_pate(const StackedDataset& data, const std::vector<std::string>& w) {
    const OutcomePredictions pred = fit_outcome_model(data, w);
    PateEstimate est;
    est.estimator = EstimatorKind::outcome_model;
    est.point = mean_difference(pred.treated_population, pred.control_population);
    est.n_used = data.n_experiment();
    est.m_used = data.m_population();
    est.set_used = w;
    return est;
}

PateEstimate aipw_from_predictions(const StackedDataset& data, const OutcomePredictions& predictions,
                                   const Eigen::VectorXd& pi, const std::vector<double>& p) {
    check_weight_inputs(data, pi, p);
    const std::size_t n = data.n_experiment();
    if (static_cast<std::size_t>(predictions.treated_experiment.size()) != n ||
        static_cast<std::size_t>(predictions.control_experiment.size()) != n ||
        static_cast<std::size_t>(predictions.treated_population.size()) != data.m_population() ||
        static_cast<std::size_t>(predictions.control_population.size()) != data.m_population()) {
        throw ArgumentError("prediction lengths do not match the dataset");
    }
    if (data.m_population() == 0) throw ArgumentError("no population rows to average over");
    VectorXd residual(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Index>(i);
        const double fitted = data.t()[i] == 1 ? predictions.treated_experiment(k) : predictions.control_experiment(k);
        residual(k) = data.y()[i] - fitted;
    }
    const ArmMeans correction = hajek_means(data.t(), residual, pi, p);
    PateEstimate est;
    est.estimator = EstimatorKind::aipw;
    est.point = mean_difference(predictions.treated_population, predictions.control_population) +
                (correction.treated - correction.control);
    est.n_used = n;
    est.m_used = data.m_population();
    return est;
}

PateEstimate aipw_pate(const StackedDataset& data, const std::vector<std::string>& w, const Eigen::VectorXd& pi,
                       const std::vector<double>& p) {
    PateEstimate est = aipw_from_predictions(data, fit_outcome_model(data, w), pi, p);
    est.set_used = w;
    return est;
}

std::string to_json(const std::string& outcome, const std::vector<PateEstimate>& estimates) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : estimates) {
        rows.push_back({{"outcome", outcome},
                        {"estimator", to_string(e.estimator)},
                        {"point", e.point},
                        {"se", opt(e.se)},
                        {"ci_low", opt(e.ci_low)},
                        {"ci_high", opt(e.ci_high)},
                        {"n_used", e.n_used},
                        {"m_used", e.m_used},
                        {"set_used", e.set_used}});
    }
    return rows.dump(2) + "\n";
}

}  // namespace gensep
