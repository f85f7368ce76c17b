#pragma once

#include "gensep/data.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace gensep {

/// Case-weighted logistic model of Pr(S = 1 | W) over the stacked rows.
struct SamplingModel {
    std::vector<std::string> covariates;   ///< W
    std::vector<std::string> design_names; ///< "(Intercept)" then one per design column
    Eigen::VectorXd coefficients;          ///< intercept first
    Eigen::VectorXd probability;           ///< fitted Pr(S = 1 | W), every row
    Eigen::VectorXd case_weights;          ///< 1 on experiment rows, m / (N - n) on population rows
    std::size_t n_experiment = 0;
    int iterations = 0;
};

/// Newton-Raphson fit to a mean gradient norm below 1e-8. Throws
/// ArgumentError if W names an unknown or population-unmeasured variable
/// and NumericalError on perfect separation.
SamplingModel fit_sampling_model(const StackedDataset& data, const std::vector<std::string>& w);

/// Generalization weights for the experiment rows,
///
///     pi_i = 1 / Pr(S=1|W_i) * Pr(S=0|W_i) / Pr(S=0),
///
/// with Pr(S=0) the case-weighted mean of the fitted Pr(S=0|W). An optional
/// cap clips the weights from above.
Eigen::VectorXd compute_weights(const SamplingModel& model, std::optional<double> cap = std::nullopt);

/// Per-experiment-row Pr(T = 1). Precedence: the dataset's propensity column
/// (required constant within strata when strata are present), then
/// per-stratum treated shares, then `constant`, then the overall treated
/// share. Throws ArgumentError for values outside (0, 1).
std::vector<double> treatment_probabilities(const StackedDataset& data,
                                            std::optional<double> constant = std::nullopt);

enum class EstimatorKind { ipw, outcome_model, aipw, sate_dim };

const char* to_string(EstimatorKind kind) noexcept;
/// Accepts ipw, outcome_model, aipw, sate_dim and the alias naive.
EstimatorKind parse_estimator(const std::string& name);

struct PateEstimate {
    EstimatorKind estimator = EstimatorKind::ipw;
    double point = 0.0;
    std::optional<double> se;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t n_used = 0;
    std::size_t m_used = 0;
    std::vector<std::string> set_used;
};

/// Hajek form: weighted treated mean minus weighted control mean with
/// weights pi*p*T and pi*(1-p)*(1-T). Throws NumericalError when an arm has
/// zero total weight.
PateEstimate ipw_pate(const StackedDataset& data, const Eigen::VectorXd& pi, const std::vector<double>& p);

/// Unweighted difference in means over experiment rows.
PateEstimate sate_dim(const StackedDataset& data);

/// Per-arm OLS predictions of both potential outcomes.
struct OutcomePredictions {
    Eigen::VectorXd treated_experiment;     ///< m1 on experiment rows
    Eigen::VectorXd control_experiment;     ///< m0 on experiment rows
    Eigen::VectorXd treated_population;     ///< m1 on population rows
    Eigen::VectorXd control_population;     ///< m0 on population rows
};

/// Fits Y ~ 1 + W separately in each arm of the experiment. Throws
/// ArgumentError when an arm has too few rows and NumericalError naming the
/// collinear columns of a rank-deficient design.
OutcomePredictions fit_outcome_model(const StackedDataset& data, const std::vector<std::string>& w);

/// Mean over population rows of m1 - m0.
PateEstimate outcome_model_pate(const StackedDataset& data, const std::vector<std::string>& w);

/// Transported AIPW: population mean of m1 - m0 plus the Hajek-weighted
/// mean residual of each arm (treated minus control).
PateEstimate aipw_pate(const StackedDataset& data, const std::vector<std::string>& w, const Eigen::VectorXd& pi,
                       const std::vector<double>& p);

/// AIPW from supplied predictions.
PateEstimate aipw_from_predictions(const StackedDataset& data, const OutcomePredictions& predictions,
                                   const Eigen::VectorXd& pi, const std::vector<double>& p);

/// Design matrix (no intercept) of the named covariates over a row range,
/// categorical variables expanded into level dummies against level 0.
Eigen::MatrixXd covariate_design(const StackedDataset& data, const std::vector<std::string>& w, std::size_t first,
                                 std::size_t count, std::vector<std::string>* names = nullptr);

/// Array of {outcome, estimator, point, se, ci_low, ci_high, set_used}.
std::string to_json(const std::string& outcome, const std::vector<PateEstimate>& estimates);

}  // namespace gensep
