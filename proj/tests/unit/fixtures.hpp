#pragma once

#include "gensep/data.hpp"
#include "gensep/graph.hpp"
#include "gensep/rng.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace fixtures {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("gensep_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Continuous covariates, experiment rows with (t, y), population rows after.
inline gensep::StackedDataset stacked(const std::vector<std::vector<double>>& exp_x, const std::vector<int>& t,
                                      const std::vector<double>& y, const std::vector<std::vector<double>>& pop_x,
                                      std::vector<std::string> names = {}) {
    const std::size_t q = exp_x.empty() ? (pop_x.empty() ? 0 : pop_x[0].size()) : exp_x[0].size();
    if (names.empty()) {
        for (std::size_t j = 0; j < q; ++j) names.push_back("X" + std::to_string(j + 1));
    }
    std::vector<gensep::VariableSpec> specs;
    for (const auto& n : names) specs.push_back(gensep::VariableSpec::continuous(n));
    const std::size_t n = exp_x.size(), m = pop_x.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n + m), static_cast<Eigen::Index>(q));
    std::vector<int> s(n + m, 0), tt(n + m, -1);
    std::vector<double> yy(n + m, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < q; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = exp_x[i][j];
        s[i] = 1;
        tt[i] = t[i];
        yy[i] = y[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            x(static_cast<Eigen::Index>(n + i), static_cast<Eigen::Index>(j)) = pop_x[i][j];
        }
    }
    return gensep::StackedDataset(std::move(specs), std::move(x), std::move(s), std::move(tt), std::move(yy));
}

/// Erdos-Renyi graph over nodes V0..V{q-1}.
inline gensep::MarkovGraph random_graph(gensep::Rng& rng, std::size_t q, double density) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < q; ++i) names.push_back("V" + std::to_string(i));
    std::bernoulli_distribution coin(density);
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            if (coin(rng)) edges.emplace_back(names[i], names[j]);
        }
    }
    return gensep::MarkovGraph::from_edges(names, edges);
}

}  // namespace fixtures
