#pragma once

#include "gensep/cover.hpp"
#include "gensep/data.hpp"
#include "gensep/graph.hpp"
#include "gensep/mgm.hpp"
#include "gensep/paths.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gensep {

enum class SepsetMode { marginal, exact };
enum class SepsetStatus { feasible, infeasible, empty_set_sufficient };

const char* to_string(SepsetMode mode) noexcept;
const char* to_string(SepsetStatus status) noexcept;

struct SeparatingSetSolution {
    SepsetStatus status = SepsetStatus::empty_set_sufficient;
    SepsetMode mode = SepsetMode::marginal;
    std::vector<std::string> selected;             ///< final set, forced members included
    std::vector<std::string> constraints_applied;  ///< excluded from selection
    std::vector<std::string> forced_included;      ///< sampling ∩ heterogeneity (exact mode)
    std::size_t path_count = 0;

    bool usable() const noexcept { return status != SepsetStatus::infeasible; }
};

struct SepsetConfig {
    MgmOptions mgm;
    std::size_t path_cap = kDefaultPathCap;
};

/// Minimum covering set of the rows of `paths`. Columns named in `excluded`
/// and the optional `always_excluded` column (the outcome in marginal mode)
/// can never be selected. With no rows the empty set suffices; when some row
/// contains only excluded columns the problem is infeasible.
SeparatingSetSolution solve_min_cover(const PathMatrix& paths, const std::vector<std::string>& excluded,
                                      const std::optional<std::string>& always_excluded = std::nullopt);

/// Marginal mode on a given graph that no longer contains the treatment:
/// covers every simple path from `outcome` to each sampling variable.
SeparatingSetSolution marginal_sepset_from_graph(const MarkovGraph& graph, const std::string& outcome,
                                                 const std::vector<std::string>& sampling_set,
                                                 const std::vector<std::string>& excluded,
                                                 std::size_t path_cap = kDefaultPathCap);

/// Exact mode on a given graph without the treatment: covers every simple
/// path between each heterogeneity/sampling pair, then adds the
/// intersection of the two sets unconditionally.
SeparatingSetSolution exact_sepset_from_graph(const MarkovGraph& graph,
                                              const std::vector<std::string>& heterogeneity_set,
                                              const std::vector<std::string>& sampling_set,
                                              const std::vector<std::string>& excluded,
                                              std::size_t path_cap = kDefaultPathCap);

/// Fits the MRF over covariates, outcome and treatment on the experiment,
/// drops the treatment node and solves in marginal mode.
SeparatingSetSolution estimate_marginal_sepset(const StackedDataset& data, const std::vector<std::string>& sampling_set,
                                               const std::vector<std::string>& unmeasured,
                                               const SepsetConfig& config = {});

/// Fits the MRF over covariates and treatment (no outcome), drops the
/// treatment node and solves in exact mode.
SeparatingSetSolution estimate_exact_sepset(const StackedDataset& data, const std::vector<std::string>& sampling_set,
                                            const std::vector<std::string>& heterogeneity_set,
                                            const std::vector<std::string>& unmeasured,
                                            const SepsetConfig& config = {});

/// {status, mode, selected[], forced[], excluded[]}
std::string to_json(const SeparatingSetSolution& solution);

}  // namespace gensep
