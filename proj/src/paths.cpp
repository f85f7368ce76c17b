#include "gensep/paths.hpp"

#include "gensep/error.hpp"

namespace gensep {

std::vector<std::vector<std::size_t>> enumerate_simple_paths(const MarkovGraph& graph, std::size_t source,
                                                             std::size_t target, std::size_t path_cap) {
    const std::size_t n = graph.size();
    if (source >= n || target >= n) throw ArgumentError("enumerate_simple_paths: node index out of range");
    if (source == target) throw ArgumentError("enumerate_simple_paths: source and target coincide");

    std::vector<std::vector<std::size_t>> paths;
    std::vector<char> on_path(n, 0);
    std::vector<std::size_t> path{source};
    // explicit stack of next-neighbor cursors
    std::vector<std::size_t> cursor{0};
    on_path[source] = 1;

    while (!path.empty()) {
        const std::size_t u = path.back();
        const auto& nbrs = graph.neighbors(u);
        std::size_t& next = cursor.back();
        if (u == target || next >= nbrs.size()) {
            on_path[u] = 0;
            path.pop_back();
            cursor.pop_back();
            continue;
        }
        const std::size_t v = nbrs[next++];
        if (on_path[v]) continue;
        if (v == target) {
            if (paths.size() >= path_cap) {
                throw PathExplosionError("more than " + std::to_string(path_cap) + " simple paths between '" +
                                             graph.names()[source] + "' and '" + graph.names()[target] + "'",
                                         path_cap);
            }
            paths.push_back(path);
            paths.back().push_back(v);
            continue;
        }
        on_path[v] = 1;
        path.push_back(v);
        cursor.push_back(0);
    }
    return paths;
}

}  // namespace gensep
