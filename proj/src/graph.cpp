#include "gensep/graph.hpp"

#include "gensep/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <iomanip>
#include <set>
#include <sstream>

namespace gensep {

MarkovGraph::MarkovGraph(std::vector<std::string> names, std::vector<std::vector<bool>> adjacency,
                         Eigen::MatrixXd weights, EdgeRule rule)
    : names_(std::move(names)), adj_(std::move(adjacency)), weights_(std::move(weights)), rule_(rule) {
    const std::size_t n = names_.size();
    std::set<std::string> unique(names_.begin(), names_.end());
    if (unique.size() != n) throw ArgumentError("graph node names must be unique");
    if (adj_.size() != n || static_cast<std::size_t>(weights_.rows()) != n ||
        static_cast<std::size_t>(weights_.cols()) != n) {
        throw ArgumentError("graph adjacency/weight dimensions do not match node count");
    }
    nbrs_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        if (adj_[i].size() != n) throw ArgumentError("graph adjacency must be square");
        if (adj_[i][i]) throw ArgumentError("self-edge on '" + names_[i] + "'");
        for (std::size_t j = 0; j < n; ++j) {
            if (j < i && adj_[i][j] != adj_[j][i]) throw ArgumentError("graph adjacency must be symmetric");
            if (adj_[i][j]) {
                if (!(weight(i, j) > 0.0)) throw ArgumentError("edge weights must be positive");
                nbrs_[i].push_back(j);
            }
        }
    }
}

MarkovGraph MarkovGraph::from_edges(std::vector<std::string> names,
                                    const std::vector<std::pair<std::string, std::string>>& edges, EdgeRule rule) {
    const std::size_t n = names.size();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    auto find = [&](const std::string& s) {
        auto it = std::find(names.begin(), names.end(), s);
        if (it == names.end()) throw ArgumentError("edge refers to unknown node '" + s + "'");
        return static_cast<std::size_t>(it - names.begin());
    };
    for (const auto& [a, b] : edges) {
        const auto i = find(a), j = find(b);
        adj[i][j] = adj[j][i] = true;
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return MarkovGraph(std::move(names), std::move(adj), std::move(w), rule);
}

bool MarkovGraph::has_node(const std::string& name) const noexcept {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t MarkovGraph::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ArgumentError("unknown graph node '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t MarkovGraph::edge_count() const noexcept {
    std::size_t count = 0;
    for (const auto& nb : nbrs_) count += nb.size();
    return count / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> MarkovGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < size(); ++i) {
        for (auto j : nbrs_[i]) {
            if (j > i) out.emplace_back(i, j);
        }
    }
    return out;
}

MarkovGraph remove_node(const MarkovGraph& graph, const std::string& node) {
    const std::size_t drop = graph.index_of(node);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        if (i != drop) keep.push_back(i);
    }
    const std::size_t n = keep.size();
    std::vector<std::string> names;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
        names.push_back(graph.names()[keep[a]]);
        for (std::size_t b = 0; b < n; ++b) {
            adj[a][b] = graph.adjacent(keep[a], keep[b]);
            w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = graph.weight(keep[a], keep[b]);
        }
    }
    return MarkovGraph(std::move(names), std::move(adj), std::move(w), graph.rule());
}

bool is_separated(const MarkovGraph& graph, const std::vector<std::string>& a, const std::vector<std::string>& b,
                  const std::vector<std::string>& conditioning) {
    const std::size_t n = graph.size();
    std::vector<char> blocked(n, 0), target(n, 0), seen(n, 0);
    for (const auto& c : conditioning) blocked[graph.index_of(c)] = 1;
    std::deque<std::size_t> queue;
    for (const auto& s : a) {
        const auto i = graph.index_of(s);
        if (blocked[i]) throw ArgumentError("'" + s + "' is in both a separated set and the conditioning set");
        if (!seen[i]) {
            seen[i] = 1;
            queue.push_back(i);
        }
    }
    for (const auto& s : b) {
        const auto i = graph.index_of(s);
        if (blocked[i]) throw ArgumentError("'" + s + "' is in both a separated set and the conditioning set");
        target[i] = 1;
    }
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (target[u]) return false;
        for (auto v : graph.neighbors(u)) {
            if (!blocked[v] && !seen[v]) {
                seen[v] = 1;
                queue.push_back(v);
            }
        }
    }
    return true;
}

std::string to_dot(const MarkovGraph& graph) {
    std::ostringstream os;
    os << "graph mrf {\n";
    for (const auto& name : graph.names()) os << "  \"" << name << "\";\n";
    double top = 0.0;
    for (auto [i, j] : graph.edges()) top = std::max(top, graph.weight(i, j));
    for (auto [i, j] : graph.edges()) {
        const double w = graph.weight(i, j);
        os << "  \"" << graph.names()[i] << "\" -- \"" << graph.names()[j] << "\" [weight=" << std::setprecision(6)
           << w << ", penwidth=" << std::setprecision(3) << (top > 0 ? 0.5 + 4.5 * w / top : 1.0) << "];\n";
    }
    os << "}\n";
    return os.str();
}

std::string to_edge_json(const MarkovGraph& graph) {
    nlohmann::json doc;
    doc["nodes"] = graph.names();
    doc["rule"] = graph.rule() == EdgeRule::and_rule ? "AND" : "OR";
    doc["edges"] = nlohmann::json::array();
    for (auto [i, j] : graph.edges()) {
        doc["edges"].push_back({{"from", graph.names()[i]}, {"to", graph.names()[j]}, {"weight", graph.weight(i, j)}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace gensep
