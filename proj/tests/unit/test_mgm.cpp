#include "fixtures.hpp"

#include "gensep/error.hpp"
#include "gensep/mgm.hpp"

#include <doctest.h>

#include <cmath>

using namespace gensep;
using fixtures::kNaN;

namespace {

bool has_edge(const MarkovGraph& g, const std::string& a, const std::string& b) {
    return g.adjacent(g.index_of(a), g.index_of(b));
}

/// X1 - X2 - X3 - Y - T chain, with T also randomized.
StackedDataset chain_data(Rng& rng, std::size_t n) {
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.5);
    std::vector<std::vector<double>> ex;
    std::vector<int> t;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = z(rng);
        const double x2 = 0.6 * x1 + 0.8 * z(rng);
        const double x3 = 0.6 * x2 + 0.8 * z(rng);
        const int ti = coin(rng) ? 1 : 0;
        ex.push_back({x1, x2, x3});
        t.push_back(ti);
        y.push_back(0.6 * x3 + ti + 0.8 * z(rng));
    }
    return fixtures::stacked(ex, t, y, {{0.0, 0.0, 0.0}});
}

}  // namespace

TEST_CASE("mgm recovers a gaussian chain") {
    Rng rng = stream_rng(51, 0);
    auto d = chain_data(rng, 2000);
    auto g = fit_mgm(d, true);
    CHECK(g.names() == std::vector<std::string>{"X1", "X2", "X3", "Y", "T"});
    CHECK(has_edge(g, "X1", "X2"));
    CHECK(has_edge(g, "X2", "X3"));
    CHECK(has_edge(g, "X3", "Y"));
    CHECK(has_edge(g, "Y", "T"));
    CHECK_FALSE(has_edge(g, "X1", "X3"));
    CHECK_FALSE(has_edge(g, "X1", "Y"));
    CHECK_FALSE(has_edge(g, "X1", "T"));
    CHECK(g.weight(0, 1) > 0.0);

    auto without_y = fit_mgm(d, false);
    CHECK(without_y.names() == std::vector<std::string>{"X1", "X2", "X3", "T"});
}

TEST_CASE("mgm: OR rule keeps at least the AND edges") {
    Rng rng = stream_rng(51, 1);
    auto d = chain_data(rng, 400);
    MgmOptions both;
    both.rule = EdgeRule::and_rule;
    MgmOptions either = both;
    either.rule = EdgeRule::or_rule;
    auto a = fit_mgm(d, true, both);
    auto o = fit_mgm(d, true, either);
    for (auto [i, j] : a.edges()) CHECK(o.adjacent(i, j));
    CHECK(o.rule() == EdgeRule::or_rule);
}

TEST_CASE("mgm finds no edges among independent variables") {
    Rng rng = stream_rng(51, 2);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.5);
    std::vector<std::vector<double>> ex;
    std::vector<int> t;
    std::vector<double> y;
    for (int i = 0; i < 1000; ++i) {
        ex.push_back({z(rng), z(rng), z(rng), z(rng)});
        t.push_back(coin(rng) ? 1 : 0);
        y.push_back(z(rng));
    }
    auto g = fit_mgm(fixtures::stacked(ex, t, y, {{0, 0, 0, 0}}), true);
    CHECK(g.edge_count() == 0);
}

TEST_CASE("mgm links a categorical node to its driver") {
    Rng rng = stream_rng(51, 3);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    const int n = 1500;
    Eigen::MatrixXd x(n + 1, 2);
    std::vector<int> s(n + 1, 1), t(n + 1, 0);
    std::vector<double> y(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const double x1 = z(rng);
        const double e1 = 1.5 * x1, e2 = -1.5 * x1;
        const double total = 1.0 + std::exp(e1) + std::exp(e2);
        const double r = u(rng);
        x(i, 0) = x1;
        x(i, 1) = r < 1.0 / total ? 0.0 : (r < (1.0 + std::exp(e1)) / total ? 1.0 : 2.0);
        t[static_cast<std::size_t>(i)] = u(rng) < 0.5 ? 1 : 0;
        y[static_cast<std::size_t>(i)] = z(rng);
    }
    x.row(n).setZero();
    s[n] = 0;
    t[n] = -1;
    y[n] = kNaN;
    StackedDataset d({VariableSpec::continuous("X1"), VariableSpec::categorical("G", 3)}, x, s, t, y);
    auto g = fit_mgm(d, true);
    CHECK(has_edge(g, "X1", "G"));
    CHECK_FALSE(has_edge(g, "G", "Y"));
}

TEST_CASE("mgm thresholding removes weak but selected coefficients") {
    Rng rng = stream_rng(51, 4);
    auto d = chain_data(rng, 300);
    MgmOptions none;
    none.threshold_rule = ThresholdRule::none;
    MgmOptions lw;
    auto loose = fit_mgm(d, true, none);
    auto tight = fit_mgm(d, true, lw);
    CHECK(tight.edge_count() <= loose.edge_count());
    for (auto [i, j] : tight.edges()) CHECK(loose.adjacent(i, j));

    MgmOptions huge = none;
    huge.threshold = 100.0;
    CHECK(fit_mgm(d, true, huge).edge_count() == 0);
}

TEST_CASE("mgm input errors") {
    Rng rng = stream_rng(51, 5);
    auto small = chain_data(rng, 10);
    CHECK_THROWS_AS(fit_mgm(small, true), ArgumentError);

    auto d = chain_data(rng, 100);
    MgmOptions clash;
    clash.outcome_name = "X2";
    CHECK_THROWS_AS(fit_mgm(d, true, clash), ArgumentError);

    std::vector<std::vector<double>> ex;
    std::vector<int> t;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        ex.push_back({1.0, double(i)});
        t.push_back(i % 2);
        y.push_back(i);
    }
    CHECK_THROWS_AS(fit_mgm(fixtures::stacked(ex, t, y, {{1.0, 0.0}}), true), NumericalError);
}

TEST_CASE("mgm result does not depend on the thread count") {
    Rng rng = stream_rng(51, 6);
    auto d = chain_data(rng, 500);
    MgmOptions one, four;
    four.threads = 4;
    auto a = fit_mgm(d, true, one);
    auto b = fit_mgm(d, true, four);
    CHECK(a.edges() == b.edges());
    for (auto [i, j] : a.edges()) CHECK(a.weight(i, j) == b.weight(i, j));
}
