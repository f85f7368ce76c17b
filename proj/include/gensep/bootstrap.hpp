#pragma once

#include "gensep/data.hpp"
#include "gensep/estimators.hpp"
#include "gensep/sepset.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gensep {

/// What one pass of the pipeline produced on one dataset.
struct ReplicateResult {
    SepsetStatus status = SepsetStatus::feasible;
    std::vector<std::string> selected;
    std::vector<PateEstimate> estimates;
    bool failed = false;        ///< a numerical step threw
    std::string failure;
};

using Pipeline = std::function<ReplicateResult(const StackedDataset&)>;

/// Full estimation pipeline: separating set, weights, estimators.
struct PipelineConfig {
    SepsetMode mode = SepsetMode::marginal;
    std::vector<std::string> sampling_set;
    std::vector<std::string> heterogeneity_set;
    std::vector<std::string> unmeasured;
    SepsetConfig sepset;
    std::vector<EstimatorKind> estimators{EstimatorKind::ipw};
    std::optional<double> treatment_probability;
    std::optional<double> weight_cap;
};

/// Separating set for the configured mode.
SeparatingSetSolution solve_sepset(const StackedDataset& data, const PipelineConfig& config);

/// Solves for the separating set and evaluates each configured estimator
/// on it. An infeasible solve yields no estimates.
ReplicateResult run_pipeline(const StackedDataset& data, const PipelineConfig& config);

/// Estimators only, on a fixed adjustment set.
std::vector<PateEstimate> estimate_with_set(const StackedDataset& data, const std::vector<std::string>& w,
                                            const std::vector<EstimatorKind>& estimators,
                                            std::optional<double> treatment_probability = std::nullopt,
                                            std::optional<double> weight_cap = std::nullopt);

Pipeline make_pipeline(PipelineConfig config);

struct BootstrapOptions {
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool resample_population = true;
};

struct EstimateSummary {
    EstimatorKind estimator = EstimatorKind::ipw;
    std::optional<double> point;  ///< full sample; absent when it was infeasible
    std::optional<double> se;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::size_t used = 0;  ///< replicates contributing
};

struct BootstrapReport {
    std::size_t replicates = 0;
    ReplicateResult full_sample;
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    std::size_t failed = 0;
    double infeasible_proportion = 0.0;
    std::vector<EstimateSummary> estimates;
    /// Covariate -> share of feasible replicates selecting it, covariate order.
    std::vector<std::pair<std::string, double>> selection_frequency;
    std::map<std::size_t, std::size_t> set_size_histogram;
    std::vector<ReplicateResult> detail;  ///< by replicate index
};

/// Gives every experiment row its own cluster.
StackedDataset with_singleton_clusters(const StackedDataset& data);

/// Resamples experiment clusters (and population rows unless frozen) with
/// replacement for replicate `index`.
StackedDataset bootstrap_sample(const StackedDataset& data, std::uint64_t seed, std::uint64_t index,
                                bool resample_population);

/// Runs the pipeline on the full sample and on each replicate. Replicates
/// are reduced in index order, so the report does not depend on the thread
/// count. Throws ArgumentError without a cluster column or for fewer than two
/// replicates, and InfeasibleError when every replicate is infeasible.
BootstrapReport cluster_bootstrap(const StackedDataset& data, const Pipeline& pipeline,
                                  const BootstrapOptions& options);

/// Copies the bootstrap SE and percentile interval onto the estimates.
void attach_intervals(std::vector<PateEstimate>& estimates, const BootstrapReport& report);

std::string to_json(const BootstrapReport& report);
/// variable,frequency
std::string selection_csv(const BootstrapReport& report);

/// Linear-interpolation quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace gensep
