#pragma once

#include "gensep/data.hpp"
#include "gensep/estimators.hpp"
#include "gensep/graph.hpp"
#include "gensep/mgm.hpp"
#include "gensep/paths.hpp"
#include "gensep/rng.hpp"
#include "gensep/sepset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gensep {

/// X1..X9
const std::vector<std::string>& sim_covariate_names();

/// Reference correlation matrix of the generated covariates, as printed.
Eigen::MatrixXd sim_reference_correlation();

/// `size` draws of the nine covariates. Roots X1, X6, X7 are standard
/// normal; every other column is a unit-variance linear function of its
/// parent plus independent noise.
Eigen::MatrixXd gen_covariates(Rng& rng, std::size_t size);

/// Y(t) = 5t + 10*X3*t - 10*X2*t + X6 - 3*X8 + eps.
double potential_outcome(double x2, double x3, double x6, double x8, int t, double eps) noexcept;

/// Observed outcomes for rows of `x` under treatments `t`, fresh noise.
Eigen::VectorXd gen_outcomes(Rng& rng, const Eigen::MatrixXd& x, const std::vector<int>& t);

/// Pr(S = 1) per row: -20*X4 + 20*X5, standardized over the rows, scaled by
/// 0.25 and passed through the logistic function. Throws
/// DegenerateVariableError when the linear predictor is constant.
Eigen::VectorXd sampling_probabilities(const Eigen::MatrixXd& pool);

struct SamplingDraw {
    std::vector<std::size_t> selected;  ///< pool rows, in pool order
    Eigen::VectorXd probability;        ///< per pool row
};

/// Bernoulli membership over the pool, keeping the first n members. Throws
/// ArgumentError when fewer than n are drawn.
SamplingDraw gen_sampling(Rng& rng, const Eigen::MatrixXd& pool, std::size_t n);

/// One simulated study: n experiment rows (T ~ Bernoulli(0.5)) and m
/// population rows drawn fresh.
StackedDataset gen_dataset(Rng& rng, std::size_t n, std::size_t m, double pool_factor = 8.0);

/// The true Markov structure of the experiment: X1..X9, Y, T.
MarkovGraph sim_true_graph();

enum class SetType { min_sepset, similar_sampling, similar_heterogeneity, other_appropriate, inappropriate };
const char* to_string(SetType type) noexcept;
inline constexpr std::array<SetType, 5> kSetTypes{SetType::min_sepset, SetType::similar_sampling,
                                                  SetType::similar_heterogeneity, SetType::other_appropriate,
                                                  SetType::inappropriate};

/// Appropriate sets separate Y from {X4, X5} in the true graph without T.
/// Infeasible solutions are inappropriate. Appropriate sets are bucketed by
/// containing {X1}, then {X4, X5}, then {X2, X3}.
SetType classify_set(SepsetStatus status, const std::vector<std::string>& selected);

struct SimConfig {
    std::vector<std::size_t> sizes{2000};
    std::size_t m = 10000;
    double pool_factor = 8.0;
    std::size_t reps = 500;
    std::uint64_t seed = 1;
    bool constraint_x1_unmeasured = false;
    std::vector<EstimatorKind> estimators{EstimatorKind::ipw, EstimatorKind::sate_dim};
    bool estimate_sets = true;
    unsigned threads = 1;
    MgmOptions mgm;
    std::size_t path_cap = kDefaultPathCap;
};

/// Throws ArgumentError for n < 100, reps < 1 or pool_factor < 1.
void validate(const SimConfig& config);

struct SimSetOutcome {
    std::string set_kind;
    SepsetStatus status = SepsetStatus::feasible;
    std::vector<std::string> selected;
    SetType type = SetType::inappropriate;
    bool failed = false;
};

struct SimEstimate {
    std::string set_kind;
    EstimatorKind estimator = EstimatorKind::ipw;
    double point = 0.0;
};

struct SimReplicate {
    std::size_t n = 0;
    std::size_t rep = 0;
    std::vector<SimSetOutcome> sets;
    std::vector<SimEstimate> estimates;
};

struct BiasRow {
    std::size_t n = 0;
    EstimatorKind estimator = EstimatorKind::ipw;
    std::string set_kind;
    std::string set_type = "all";
    std::size_t reps = 0;
    double mean = 0.0;
    double bias = 0.0;
    double se = 0.0;
    double rmse = 0.0;
};

struct TypeRow {
    std::size_t n = 0;
    std::string set_kind;
    SetType type = SetType::inappropriate;
    std::size_t count = 0;
    double frequency = 0.0;
};

struct SimResult {
    std::vector<SimReplicate> replicates;  ///< by size, then replicate index
    std::vector<BiasRow> bias;
    std::vector<TypeRow> types;
    /// (n, set kind) -> share of replicates selecting exactly {X1}
    std::vector<std::tuple<std::size_t, std::string, double>> exact_minimum;

    const BiasRow* find_bias(std::size_t n, EstimatorKind estimator, const std::string& set_kind,
                             const std::string& set_type = "all") const;
    double type_frequency(std::size_t n, const std::string& set_kind, SetType type) const;
    double exact_minimum_frequency(std::size_t n, const std::string& set_kind) const;
};

inline constexpr double kTruePate = 5.0;

/// Set kinds: oracle_sampling {X4,X5}, oracle_heterogeneity {X2,X3},
/// oracle_minimum {X1}, estimated_marginal, estimated_exact and, with the
/// constraint flag, estimated_marginal_x1_unmeasured. The difference in
/// means is reported under set kind "none".
SimResult run_simulation(const SimConfig& config);

std::string sim_bias_csv(const SimResult& result);
std::string sim_types_csv(const SimResult& result);

}  // namespace gensep
