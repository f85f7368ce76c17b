#pragma once

#include "gensep/bootstrap.hpp"
#include "gensep/data.hpp"
#include "gensep/graph.hpp"
#include "gensep/sepset.hpp"
#include "gensep/simulate.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gensep {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumerical = 2, kExitInfeasible = 3 };

/// Everything a run reads from its config file and flags.
struct RunConfig {
    std::string experiment_csv;
    std::string population_csv;
    std::string outcome = "Y";
    std::string treatment = "T";
    std::string cluster;
    std::string strata;
    std::string propensity;
    std::vector<std::string> covariates;   ///< empty: every other experiment column
    std::vector<std::string> categorical;  ///< name:levels
    std::vector<std::string> sampling_set;
    std::vector<std::string> heterogeneity_set;
    std::vector<std::string> unmeasured;
    SepsetMode mode = SepsetMode::marginal;
    std::vector<EstimatorKind> estimators{EstimatorKind::ipw};
    std::size_t bootstrap_replicates = 1000;
    std::uint64_t seed = 1;
    std::optional<double> population_size;
    EdgeRule rule = EdgeRule::and_rule;
    double gamma = 0.25;
    std::size_t path_cap = kDefaultPathCap;
    int lambda_count = 50;
    double lambda_ratio = 0.01;
    double threshold = 0.0;
    std::size_t min_experiment = 20;
    unsigned threads = 1;
    std::optional<double> treatment_probability;
    std::optional<double> weight_cap;
    bool resample_population = true;
    std::string out = ".";

    std::vector<std::size_t> sim_sizes{2000};
    std::size_t sim_m = 10000;
    double sim_pool_factor = 8.0;
    std::size_t sim_reps = 500;
    bool sim_constraint_x1_unmeasured = false;
    bool sim_estimate_sets = true;
    std::vector<EstimatorKind> sim_estimators{EstimatorKind::ipw, EstimatorKind::sate_dim};
};

struct ConfigKey {
    const char* name;
    const char* description;
};

/// Every recognized key, in help order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key from its text value. Throws ArgumentError for an unknown key
/// or an unparsable value.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat "key = value" text; '#' starts a comment; lists are comma separated.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Column layout implied by the config; reads the experiment header when no
/// covariate list is given.
Schema schema_from_config(const RunConfig& config);

PipelineConfig pipeline_from_config(const RunConfig& config);
SimConfig sim_from_config(const RunConfig& config);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// Separating set, estimates and bootstrap. Returns kExitOk, or
/// kExitInfeasible when the full-sample solve is infeasible.
int cmd_estimate(const RunConfig& config, std::ostream& log);
/// Fitted graph with and without the treatment node.
int cmd_graph(const RunConfig& config, std::ostream& log);
/// Simulation tables.
int cmd_simulate(const RunConfig& config, std::ostream& log);

/// Runs a subcommand by name, mapping errors to exit codes and messages to
/// `err`.
int run_command(const std::string& command, const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace gensep
