#pragma once

#include "gensep/graph.hpp"

#include <cstddef>
#include <vector>

namespace gensep {

inline constexpr std::size_t kDefaultPathCap = 1'000'000;

/// Every simple path (no repeated node) from `source` to `target`, as node
/// index sequences including both endpoints. Depth-first with neighbors
/// visited in ascending node order, so the output order is deterministic.
///
/// Throws PathExplosionError once more than `path_cap` paths are found and
/// ArgumentError when source == target.
std::vector<std::vector<std::size_t>> enumerate_simple_paths(const MarkovGraph& graph, std::size_t source,
                                                             std::size_t target,
                                                             std::size_t path_cap = kDefaultPathCap);

}  // namespace gensep
