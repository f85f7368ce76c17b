#include "gensep/sepset.hpp"

#include "gensep/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace gensep {

const char* to_string(SepsetMode mode) noexcept {
    return mode == SepsetMode::marginal ? "marginal" : "exact";
}

const char* to_string(SepsetStatus status) noexcept {
    switch (status) {
        case SepsetStatus::feasible: return "feasible";
        case SepsetStatus::infeasible: return "infeasible";
        case SepsetStatus::empty_set_sufficient: return "empty_set_sufficient";
    }
    return "unknown";
}

namespace {

std::vector<std::string> in_column_order(const std::vector<std::string>& columns, const std::set<std::string>& names) {
    std::vector<std::string> out;
    for (const auto& c : columns) {
        if (names.count(c)) out.push_back(c);
    }
    return out;
}

void require_nodes(const MarkovGraph& graph, const std::vector<std::string>& names, const char* what) {
    for (const auto& n : names) {
        if (!graph.has_node(n)) throw ArgumentError(std::string(what) + " variable '" + n + "' is not in the graph");
    }
}

/// Appends every simple path between the pairs, keeping a running total
/// against the global cap.
void add_paths(const MarkovGraph& graph, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
               std::size_t path_cap, PathMatrix& matrix) {
    std::size_t total = 0;
    for (auto [from, to] : pairs) {
        std::vector<std::vector<std::size_t>> paths;
        try {
            paths = enumerate_simple_paths(graph, from, to, path_cap - total);
        } catch (const PathExplosionError&) {
            throw PathExplosionError("more than " + std::to_string(path_cap) +
                                         " simple paths to enumerate; raise path_cap or simplify the graph",
                                     path_cap);
        }
        total += paths.size();
        for (const auto& p : paths) matrix.add_path(p);
    }
}

}  // namespace

SeparatingSetSolution solve_min_cover(const PathMatrix& paths, const std::vector<std::string>& excluded,
                                      const std::optional<std::string>& always_excluded) {
    SeparatingSetSolution sol;
    ColumnSet allowed(paths.column_count());
    for (std::size_t j = 0; j < paths.column_count(); ++j) allowed.set(j);
    std::set<std::string> excluded_set;
    for (const auto& name : excluded) {
        allowed.reset(paths.column_index(name));
        excluded_set.insert(name);
    }
    if (always_excluded) allowed.reset(paths.column_index(*always_excluded));
    sol.constraints_applied = in_column_order(paths.columns(), excluded_set);
    sol.path_count = paths.row_count();

    if (paths.row_count() == 0) {
        sol.status = SepsetStatus::empty_set_sufficient;
        return sol;
    }
    const auto cover = minimum_cover(paths.rows(), allowed);
    if (!cover) {
        sol.status = SepsetStatus::infeasible;
        return sol;
    }
    sol.status = SepsetStatus::feasible;
    for (auto j : *cover) sol.selected.push_back(paths.columns()[j]);
    return sol;
}

SeparatingSetSolution marginal_sepset_from_graph(const MarkovGraph& graph, const std::string& outcome,
                                                 const std::vector<std::string>& sampling_set,
                                                 const std::vector<std::string>& excluded, std::size_t path_cap) {
    require_nodes(graph, {outcome}, "outcome");
    require_nodes(graph, sampling_set, "sampling-set");
    require_nodes(graph, excluded, "excluded");
    if (std::find(sampling_set.begin(), sampling_set.end(), outcome) != sampling_set.end()) {
        throw ArgumentError("the outcome cannot be a sampling-set variable");
    }
    const std::size_t y = graph.index_of(outcome);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& s : sampling_set) pairs.emplace_back(y, graph.index_of(s));

    PathMatrix matrix(graph.names());
    add_paths(graph, pairs, path_cap, matrix);
    SeparatingSetSolution sol = solve_min_cover(matrix, excluded, outcome);
    sol.mode = SepsetMode::marginal;
    return sol;
}

SeparatingSetSolution exact_sepset_from_graph(const MarkovGraph& graph,
                                              const std::vector<std::string>& heterogeneity_set,
                                              const std::vector<std::string>& sampling_set,
                                              const std::vector<std::string>& excluded, std::size_t path_cap) {
    require_nodes(graph, heterogeneity_set, "heterogeneity-set");
    require_nodes(graph, sampling_set, "sampling-set");
    require_nodes(graph, excluded, "excluded");
    if (heterogeneity_set.empty()) throw ArgumentError("exact mode needs a nonempty heterogeneity set");

    const std::set<std::string> xs(sampling_set.begin(), sampling_set.end());
    const std::set<std::string> ex(excluded.begin(), excluded.end());
    std::set<std::string> forced;
    for (const auto& h : heterogeneity_set) {
        if (xs.count(h)) forced.insert(h);
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& s : sampling_set) {
        for (const auto& h : heterogeneity_set) {
            if (h != s) pairs.emplace_back(graph.index_of(h), graph.index_of(s));
        }
    }
    PathMatrix matrix(graph.names());
    add_paths(graph, pairs, path_cap, matrix);

    SeparatingSetSolution sol;
    sol.mode = SepsetMode::exact;
    sol.forced_included = in_column_order(graph.names(), forced);
    sol.constraints_applied = in_column_order(graph.names(), ex);
    sol.path_count = matrix.row_count();

    for (const auto& f : forced) {
        if (ex.count(f)) {
            // a variable that must be adjusted for cannot be measured
            sol.status = SepsetStatus::infeasible;
            return sol;
        }
    }
    if (matrix.row_count() == 0) {
        sol.status = SepsetStatus::empty_set_sufficient;
        sol.selected = sol.forced_included;
        return sol;
    }

    // Paths through a forced variable are already blocked by it.
    ColumnSet forced_cols(matrix.column_count());
    for (const auto& f : forced) forced_cols.set(matrix.column_index(f));
    PathMatrix open(graph.names());
    for (const auto& row : matrix.rows()) {
        if (!row.intersects(forced_cols)) open.add_path(row.indices());
    }
    const SeparatingSetSolution cover = solve_min_cover(open, excluded);
    if (cover.status == SepsetStatus::infeasible) {
        sol.status = SepsetStatus::infeasible;
        return sol;
    }
    sol.status = SepsetStatus::feasible;
    std::set<std::string> chosen(cover.selected.begin(), cover.selected.end());
    chosen.insert(forced.begin(), forced.end());
    sol.selected = in_column_order(graph.names(), chosen);
    return sol;
}

namespace {

void require_covariates(const StackedDataset& data, const std::vector<std::string>& names, const char* what) {
    for (const auto& n : names) {
        if (!data.has_covariate(n)) throw ArgumentError(std::string(what) + " variable '" + n + "' is not a covariate");
    }
}

}  // namespace

SeparatingSetSolution estimate_marginal_sepset(const StackedDataset& data, const std::vector<std::string>& sampling_set,
                                               const std::vector<std::string>& unmeasured,
                                               const SepsetConfig& config) {
    require_covariates(data, sampling_set, "sampling-set");
    require_covariates(data, unmeasured, "unmeasured");
    const MarkovGraph full = fit_mgm(data, true, config.mgm);
    const MarkovGraph graph = remove_node(full, config.mgm.treatment_name);
    return marginal_sepset_from_graph(graph, config.mgm.outcome_name, sampling_set, unmeasured, config.path_cap);
}

SeparatingSetSolution estimate_exact_sepset(const StackedDataset& data, const std::vector<std::string>& sampling_set,
                                            const std::vector<std::string>& heterogeneity_set,
                                            const std::vector<std::string>& unmeasured, const SepsetConfig& config) {
    require_covariates(data, sampling_set, "sampling-set");
    require_covariates(data, heterogeneity_set, "heterogeneity-set");
    require_covariates(data, unmeasured, "unmeasured");
    const MarkovGraph full = fit_mgm(data, false, config.mgm);
    const MarkovGraph graph = remove_node(full, config.mgm.treatment_name);
    return exact_sepset_from_graph(graph, heterogeneity_set, sampling_set, unmeasured, config.path_cap);
}

std::string to_json(const SeparatingSetSolution& solution) {
    nlohmann::json doc{{"status", to_string(solution.status)},
                       {"mode", to_string(solution.mode)},
                       {"selected", solution.selected},
                       {"forced", solution.forced_included},
                       {"excluded", solution.constraints_applied},
                       {"path_count", solution.path_count}};
    return doc.dump(2) + "\n";
}

}  // namespace gensep
