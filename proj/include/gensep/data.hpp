#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace gensep {

enum class VariableKind { continuous, categorical };

struct VariableSpec {
    std::string name;
    VariableKind kind = VariableKind::continuous;
    int level_count = 1;
    bool measured_in_population = true;

    static VariableSpec continuous(std::string name, bool in_population = true) {
        return {std::move(name), VariableKind::continuous, 1, in_population};
    }
    static VariableSpec categorical(std::string name, int levels, bool in_population = true) {
        return {std::move(name), VariableKind::categorical, levels, in_population};
    }
};

/// Column layout of the two input files.
struct Schema {
    std::vector<VariableSpec> covariates;
    std::string outcome = "Y";
    std::string treatment = "T";
    std::optional<std::string> cluster;
    std::optional<std::string> strata;
    std::optional<std::string> propensity;  ///< per-row Pr(T=1) column, experiment file
    bool require_cluster = false;
    std::optional<double> population_size;  ///< declared N; defaults to n + m
};

/// Experiment rows (s = 1) followed by population rows (s = 0).
///
/// Covariates live in one dense matrix; a value that is absent by design
/// (a covariate not measured in the population) is stored as NaN. Treatment,
/// outcome and cluster are populated for experiment rows only.
class StackedDataset {
public:
    StackedDataset() = default;

    /// Validates every invariant and throws InputError on violation.
    StackedDataset(std::vector<VariableSpec> specs, Eigen::MatrixXd covariates,
                   std::vector<int> s, std::vector<int> t, std::vector<double> y,
                   std::vector<std::string> cluster = {}, std::optional<double> population_size = {});

    const std::vector<VariableSpec>& specs() const noexcept { return specs_; }
    const Eigen::MatrixXd& covariates() const noexcept { return x_; }
    const std::vector<int>& s() const noexcept { return s_; }
    const std::vector<int>& t() const noexcept { return t_; }
    const std::vector<double>& y() const noexcept { return y_; }
    const std::vector<std::string>& cluster() const noexcept { return cluster_; }
    bool has_cluster() const noexcept { return !cluster_.empty(); }

    std::size_t rows() const noexcept { return s_.size(); }
    std::size_t n_experiment() const noexcept { return n_; }
    std::size_t m_population() const noexcept { return m_; }
    double population_size() const noexcept { return big_n_; }
    /// True when the declared N exceeds n + m, so population rows get
    /// case weight m / (N - n).
    bool weighting_adjusted() const noexcept;

    /// Index of the named covariate; throws ArgumentError if unknown.
    std::size_t covariate_index(const std::string& name) const;
    bool has_covariate(const std::string& name) const noexcept;
    std::vector<std::string> covariate_names() const;

    /// Rows [0, n) are the experiment; rows [n, n + m) the population.
    bool is_experiment(std::size_t row) const noexcept { return s_[row] == 1; }

    /// Optional per-row treatment probability and strata labels, carried for
    /// the estimators. Lengths equal rows() when set.
    std::vector<double> propensity;
    std::vector<std::string> strata;

    std::size_t dropped_experiment_rows = 0;
    std::size_t dropped_population_rows = 0;

private:
    std::vector<VariableSpec> specs_;
    Eigen::MatrixXd x_;
    std::vector<int> s_;
    std::vector<int> t_;
    std::vector<double> y_;
    std::vector<std::string> cluster_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    double big_n_ = 0.0;
};

/// Reads the experiment and population CSVs. Rows with a missing entry
/// (empty or "NA") in a required column are dropped and counted. The
/// population file must carry every population-measured covariate; columns
/// of unmeasured covariates are ignored and anything else is a SchemaError.
StackedDataset load_csv(const std::string& path_experiment, const std::string& path_population,
                        const Schema& schema);

/// Writes the two halves of a dataset back out in the layout load_csv reads.
/// Floats are printed with round-trip precision.
void write_csv(const StackedDataset& data, const std::string& path_experiment,
               const std::string& path_population, const Schema& schema);

/// Builds a dataset from chosen experiment and population row indices
/// (repeats allowed). The declared population size is carried over.
StackedDataset take_rows(const StackedDataset& data, const std::vector<std::size_t>& experiment_rows,
                         const std::vector<std::size_t>& population_rows);

/// Per-variable affine map applied by standardize().
struct StandardizeRecord {
    std::vector<double> covariate_center;  ///< 0 for categorical columns
    std::vector<double> covariate_scale;   ///< 1 for categorical columns
    double outcome_center = 0.0;
    double outcome_scale = 1.0;

    /// Maps standardized values back onto the original scale.
    StackedDataset invert(const StackedDataset& standardized) const;
};

/// Centers and scales each continuous covariate and the outcome to mean 0
/// and sample SD 1 over experiment rows. The same map is applied to the
/// population rows. Throws DegenerateVariableError on a constant column.
std::pair<StackedDataset, StandardizeRecord> standardize(const StackedDataset& data);

}  // namespace gensep
