#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace gensep {

enum class EdgeRule { and_rule, or_rule };

/// Undirected graph over named nodes. Adjacency is symmetric with no
/// self-loops, and every edge carries a positive weight.
class MarkovGraph {
public:
    MarkovGraph() = default;

    /// Throws ArgumentError when the adjacency is asymmetric, has a self-loop,
    /// or an edge has a nonpositive weight.
    MarkovGraph(std::vector<std::string> names, std::vector<std::vector<bool>> adjacency,
                Eigen::MatrixXd weights, EdgeRule rule = EdgeRule::and_rule);

    /// Graph with unit-weight edges given by name pairs.
    static MarkovGraph from_edges(std::vector<std::string> names,
                                  const std::vector<std::pair<std::string, std::string>>& edges,
                                  EdgeRule rule = EdgeRule::and_rule);

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    EdgeRule rule() const noexcept { return rule_; }

    bool has_node(const std::string& name) const noexcept;
    /// Throws ArgumentError for an unknown name.
    std::size_t index_of(const std::string& name) const;

    bool adjacent(std::size_t i, std::size_t j) const { return adj_[i][j]; }
    double weight(std::size_t i, std::size_t j) const { return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
    /// Neighbors in ascending node order.
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return nbrs_[i]; }

    std::size_t edge_count() const noexcept;
    /// Edges (i < j) in row-major order.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<bool>> adj_;
    Eigen::MatrixXd weights_;
    std::vector<std::vector<std::size_t>> nbrs_;
    EdgeRule rule_ = EdgeRule::and_rule;
};

/// Copy of `graph` without `node` and its incident edges.
MarkovGraph remove_node(const MarkovGraph& graph, const std::string& node);

/// True iff no path joins a node of `a` to a node of `b` once the nodes in
/// `conditioning` are deleted. `a` and `b` must not meet `conditioning`.
bool is_separated(const MarkovGraph& graph, const std::vector<std::string>& a, const std::vector<std::string>& b,
                  const std::vector<std::string>& conditioning);

/// Graphviz rendering, edge pen width proportional to weight.
std::string to_dot(const MarkovGraph& graph);

/// JSON document {"nodes": [...], "rule": ..., "edges": [{from, to, weight}]}.
std::string to_edge_json(const MarkovGraph& graph);

}  // namespace gensep
