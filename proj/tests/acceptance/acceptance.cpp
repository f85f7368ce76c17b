// Acceptance suite: one PASS/FAIL line per criterion with the achieved numbers.
// Usage: acceptance [C1 C2 ...]   (no arguments runs everything)

#include "gensep/bootstrap.hpp"
#include "gensep/cli.hpp"
#include "gensep/cover.hpp"
#include "gensep/error.hpp"
#include "gensep/estimators.hpp"
#include "gensep/graph.hpp"
#include "gensep/lasso.hpp"
#include "gensep/parallel.hpp"
#include "gensep/paths.hpp"
#include "gensep/sepset.hpp"
#include "gensep/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace gensep;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string sci(double v) {
    std::ostringstream os;
    os.setf(std::ios::scientific);
    os.precision(2);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned worker_count() { return resolve_threads(0); }

// Simulation runs are shared between criteria, so each is computed once.
const SimResult& sim_n2000() {
    static std::optional<SimResult> r;
    if (!r) {
        SimConfig c;
        c.sizes = {2000};
        c.m = 10000;
        c.reps = 500;
        c.seed = 20240601;
        c.threads = worker_count();
        c.estimators = {EstimatorKind::ipw, EstimatorKind::sate_dim};
        r = run_simulation(c);
    }
    return *r;
}

const SimResult& sim_n3000() {
    static std::optional<SimResult> r;
    if (!r) {
        SimConfig c;
        c.sizes = {3000};
        c.m = 10000;
        c.reps = 500;
        c.seed = 20240602;
        c.threads = worker_count();
        c.constraint_x1_unmeasured = true;
        c.estimators = {EstimatorKind::ipw};
        r = run_simulation(c);
    }
    return *r;
}

Outcome c1_bias() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& r = sim_n2000();
    Outcome o{true, ""};
    for (const char* kind : {"oracle_sampling", "estimated_marginal", "estimated_exact"}) {
        const BiasRow* row = r.find_bias(2000, EstimatorKind::ipw, kind);
        if (!row) {
            o.pass = false;
            o.detail += std::string(kind) + " missing; ";
            continue;
        }
        o.pass = o.pass && std::abs(row->bias) < 0.15;
        o.detail += std::string(kind) + " bias " + fmt(row->bias) + " (reps " + std::to_string(row->reps) + "); ";
    }
    o.detail += "bound 0.15, " + fmt(seconds_since(t0), 1) + " s";
    return o;
}

Outcome c2_naive() {
    const BiasRow* row = sim_n2000().find_bias(2000, EstimatorKind::sate_dim, "none");
    if (!row) return {false, "difference-in-means row missing"};
    return {row->bias >= -1.15 && row->bias <= -0.85,
            "difference-in-means bias " + fmt(row->bias) + ", target [-1.15, -0.85]"};
}

Outcome c3_selection() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& r = sim_n3000();
    const double exact = r.exact_minimum_frequency(3000, "estimated_marginal");
    const double containing = r.type_frequency(3000, "estimated_marginal", SetType::min_sepset);
    return {exact >= 0.60, "estimated marginal set equals {X1} in " + fmt(100.0 * exact, 1) +
                               "% of replicates (contains X1 and separates: " + fmt(100.0 * containing, 1) +
                               "%), threshold 60%, " + fmt(seconds_since(t0), 1) + " s"};
}

Outcome c4_constrained() {
    const auto& r = sim_n3000();
    auto combined = [&](const std::string& kind) {
        return r.type_frequency(3000, kind, SetType::similar_sampling) +
               r.type_frequency(3000, kind, SetType::similar_heterogeneity);
    };
    const double base = combined("estimated_marginal");
    const double constrained = combined("estimated_marginal_x1_unmeasured");
    return {constrained > base, "sampling-like + heterogeneity-like share: unconstrained " + fmt(100.0 * base, 1) +
                                    "%, X1 unmeasured " + fmt(100.0 * constrained, 1) + "%"};
}

Outcome c5_consistency() {
    SimConfig c;
    c.sizes = {500, 1000, 2000};
    c.m = 10000;
    c.reps = 500;
    c.seed = 20240603;
    c.threads = worker_count();
    c.estimate_sets = false;
    c.estimators = {EstimatorKind::ipw};
    const auto r = run_simulation(c);
    std::vector<double> rmse;
    std::string detail = "oracle-set IPW RMSE:";
    for (auto n : c.sizes) {
        const BiasRow* row = r.find_bias(n, EstimatorKind::ipw, "oracle_sampling");
        if (!row) return {false, "missing row for n=" + std::to_string(n)};
        rmse.push_back(row->rmse);
        detail += " n=" + std::to_string(n) + " " + fmt(row->rmse);
    }
    const bool pass = rmse[0] > rmse[1] && rmse[1] > rmse[2];
    return {pass, detail};
}

MarkovGraph random_graph(Rng& rng, std::size_t q, double density) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < q; ++i) names.push_back("V" + std::to_string(i));
    std::bernoulli_distribution coin(density);
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i + 1; j < q; ++j)
            if (coin(rng)) edges.emplace_back(names[i], names[j]);
    return MarkovGraph::from_edges(names, edges);
}

Outcome c6_solver() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = stream_rng(606, 0);
    std::uniform_int_distribution<std::size_t> q_pick(3, 12);
    std::uniform_real_distribution<double> density(0.1, 0.45);
    std::bernoulli_distribution coin(0.25);
    std::size_t instances = 0, mismatches = 0, infeasible = 0, skipped = 0;
    while (instances < 500) {
        const std::size_t q = q_pick(rng);
        const MarkovGraph g = random_graph(rng, q, density(rng));
        std::vector<std::size_t> targets{q - 1};
        if (q > 3 && coin(rng)) targets.push_back(q - 2);
        PathMatrix pm(g.names());
        try {
            for (auto t : targets)
                for (const auto& p : enumerate_simple_paths(g, 0, t, 200000)) pm.add_path(p);
        } catch (const PathExplosionError&) {
            ++skipped;
            continue;
        }
        std::vector<std::string> excluded;
        for (std::size_t j = 1; j < q; ++j)
            if (coin(rng)) excluded.push_back(g.names()[j]);
        const SeparatingSetSolution sol = solve_min_cover(pm, excluded, g.names()[0]);

        // exhaustive search over all 2^q column subsets
        std::uint32_t allowed = 0;
        for (std::size_t j = 1; j < q; ++j)
            if (std::find(excluded.begin(), excluded.end(), g.names()[j]) == excluded.end()) allowed |= 1u << j;
        std::vector<std::uint32_t> rows;
        for (const auto& r : pm.rows()) {
            std::uint32_t bits = 0;
            for (auto j : r.indices()) bits |= 1u << j;
            rows.push_back(bits);
        }
        int best = -1;
        for (std::uint32_t mask = 0; mask < (1u << q); ++mask) {
            if ((mask & ~allowed) != 0) continue;
            const int size = __builtin_popcount(mask);
            if (best >= 0 && size >= best) continue;
            bool hits = true;
            for (auto r : rows) hits = hits && (r & mask) != 0;
            if (hits) best = size;
        }
        const bool brute_feasible = best >= 0;
        const bool ok = brute_feasible == sol.usable() &&
                        (!brute_feasible || static_cast<int>(sol.selected.size()) == best);
        if (!brute_feasible) ++infeasible;
        if (!ok) ++mismatches;
        ++instances;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 120.0,
            std::to_string(instances) + " instances (" + std::to_string(infeasible) + " infeasible, " +
                std::to_string(skipped) + " regenerated past the path cap), " + std::to_string(mismatches) +
                " mismatches, " + fmt(secs, 2) + " s"};
}

std::vector<std::string> without(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> out;
    for (const auto& x : a)
        if (std::find(b.begin(), b.end(), x) == b.end()) out.push_back(x);
    return out;
}

Outcome c7_soundness() {
    Rng rng = stream_rng(707, 0);
    std::uniform_int_distribution<std::size_t> q_pick(4, 10);
    std::bernoulli_distribution coin(0.3);
    std::size_t feasible = 0, violations = 0, instances = 0;
    while (instances < 200) {
        const std::size_t q = q_pick(rng);
        const MarkovGraph g = random_graph(rng, q, 0.3);
        const auto& names = g.names();
        std::vector<std::string> excluded;
        for (std::size_t j = 2; j + 1 < q; ++j)
            if (coin(rng)) excluded.push_back(names[j]);
        SeparatingSetSolution sol;
        bool separated = false;
        try {
            if (instances % 2 == 0) {
                const std::vector<std::string> xs{names[q - 1], names[q - 2]};
                sol = marginal_sepset_from_graph(g, names[0], xs, excluded, 200000);
                separated = sol.usable() && is_separated(g, {names[0]}, without(xs, sol.selected), sol.selected);
            } else {
                const std::vector<std::string> xh{names[0], names[1]};
                const std::vector<std::string> xs{names[1], names[q - 1]};
                sol = exact_sepset_from_graph(g, xh, xs, excluded, 200000);
                separated = sol.usable() &&
                            is_separated(g, without(xh, sol.selected), without(xs, sol.selected), sol.selected);
            }
        } catch (const PathExplosionError&) {
            continue;
        }
        ++instances;
        if (!sol.usable()) continue;
        ++feasible;
        if (!separated) ++violations;
    }
    return {violations == 0, std::to_string(instances) + " instances, " + std::to_string(feasible) + " feasible, " +
                                 std::to_string(violations) + " separation violations"};
}

Outcome c8_lasso() {
    Rng rng = stream_rng(808, 0);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    LassoOptions opt;
    opt.tolerance = 1e-10;
    double worst_kkt = 0.0;
    for (int problem = 0; problem < 100; ++problem) {
        const bool binomial = problem % 2 == 1;
        const Eigen::Index n = 100 + 20 * (problem % 10), p = 3 + problem % 8;
        Eigen::MatrixXd x(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) x(i, j) = z(rng);
        Eigen::VectorXd beta(p);
        for (Eigen::Index j = 0; j < p; ++j) beta[j] = u(rng) < 0.5 ? 0.0 : z(rng);
        Eigen::VectorXd w(n);
        for (auto& v : w) v = problem % 3 == 0 ? 1.0 : 0.5 + u(rng);
        Eigen::VectorXd y(n);
        const Eigen::VectorXd eta = x * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = binomial ? (u(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0) : eta[i] + z(rng);
        }
        const GlmFamily fam = binomial ? GlmFamily::binomial() : GlmFamily::gaussian();
        const auto grid = lambda_grid(lambda_max(x, y, fam, w), 20, 0.02);
        const LassoPath path = fit_path(x, y, fam, w, grid, opt);
        for (std::size_t l = 0; l < path.size(); ++l) {
            const Eigen::MatrixXd g = weighted_score(x, y, fam, w, path.intercepts[l], path.slopes[l]);
            for (Eigen::Index j = 0; j < p; ++j) {
                const double b = path.slopes[l](j, 0);
                const double v = b != 0.0 ? std::abs(g(j, 0) - grid[l] * (b > 0 ? 1.0 : -1.0))
                                          : std::max(0.0, std::abs(g(j, 0)) - grid[l]);
                worst_kkt = std::max(worst_kkt, v);
            }
        }
    }

    // orthonormal design: the solution is the soft-thresholded least-squares fit
    double worst_soft = 0.0;
    for (int problem = 0; problem < 20; ++problem) {
        const Eigen::Index n = 200, p = 6;
        Eigen::MatrixXd a(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) a(i, j) = z(rng);
        a.rowwise() -= a.colwise().mean();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        const Eigen::MatrixXd x = Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(n, p)) *
                                  std::sqrt(static_cast<double>(n));
        Eigen::VectorXd y(n);
        for (auto& v : y) v = z(rng);
        y += x.col(0) - 0.5 * x.col(1);
        const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
        LassoOptions tight;
        tight.tolerance = 1e-12;
        const std::vector<double> grid{0.6, 0.2, 0.05, 0.01};
        const LassoPath path = fit_path(x, y, GlmFamily::gaussian(), w, grid, tight);
        const Eigen::VectorXd ols = x.transpose() * (y.array() - y.mean()).matrix() / static_cast<double>(n);
        for (std::size_t l = 0; l < grid.size(); ++l) {
            for (Eigen::Index j = 0; j < p; ++j) {
                const double s = std::copysign(std::max(std::abs(ols[j]) - grid[l], 0.0), ols[j]);
                worst_soft = std::max(worst_soft, std::abs(path.slopes[l](j, 0) - s));
            }
        }
    }
    return {worst_kkt < 1e-6 && worst_soft < 1e-8,
            "max KKT violation " + sci(worst_kkt) + " over 100 problems (bound 1e-6); max soft-threshold "
                "error " + sci(worst_soft) + " (bound 1e-8)"};
}

Outcome c9_generator() {
    Rng rng = stream_rng(909, 0);
    const Eigen::MatrixXd x = gen_covariates(rng, 100000);
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    const Eigen::MatrixXd corr = cov.cwiseQuotient(sd * sd.transpose());
    const double corr_err = (corr - sim_reference_correlation()).cwiseAbs().maxCoeff();

    Rng rng2 = stream_rng(909, 1);
    std::normal_distribution<double> eps;
    double total = 0.0;
    const std::size_t draws = 1000000, chunk = 100000;
    for (std::size_t done = 0; done < draws; done += chunk) {
        const Eigen::MatrixXd c = gen_covariates(rng2, chunk);
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            const double e = eps(rng2);
            total += potential_outcome(c(i, 1), c(i, 2), c(i, 5), c(i, 7), 1, e) -
                     potential_outcome(c(i, 1), c(i, 2), c(i, 5), c(i, 7), 0, e);
        }
    }
    const double pate = total / static_cast<double>(draws);
    return {corr_err <= 0.03 && std::abs(pate - 5.0) <= 0.02,
            "max correlation error " + fmt(corr_err) + " at 1e5 draws (bound 0.03); mean Y(1)-Y(0) " + fmt(pate) +
                " at 1e6 draws (target 5.00 +/- 0.02)"};
}

Outcome c10_identities() {
    Rng rng = stream_rng(1010, 0);
    const StackedDataset d = gen_dataset(rng, 1000, 2000, 8.0);
    const std::vector<std::string> w{"X4", "X5"};
    const Eigen::VectorXd pi = compute_weights(fit_sampling_model(d, w));
    const std::vector<double> p = treatment_probabilities(d);
    const double base = ipw_pate(d, pi, p).point;
    bool scale = true;
    for (double c : {0.5, 2.0, 8.0, 1024.0}) scale = scale && ipw_pate(d, pi * c, p).point == base;

    const auto n = d.n_experiment();
    const bool dim = ipw_pate(d, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)), std::vector<double>(n, 0.5))
                         .point == sate_dim(d).point;

    OutcomePredictions pred = fit_outcome_model(d, w);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (d.t()[i] == 1) pred.treated_experiment(k) = d.y()[i];
        else pred.control_experiment(k) = d.y()[i];
    }
    const bool aipw = aipw_from_predictions(d, pred, pi, p).point == outcome_model_pate(d, w).point;
    return {scale && dim && aipw, std::string("scale invariance ") + (scale ? "exact" : "BROKEN") +
                                      ", unit-weight IPW vs difference in means " + (dim ? "exact" : "BROKEN") +
                                      ", zero-residual AIPW vs outcome model " + (aipw ? "exact" : "BROKEN")};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome c11_determinism() {
    const fs::path root = fs::temp_directory_path() / ("gensep_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> sim_outputs, boot_outputs;
    std::ostringstream sink;
    for (unsigned th : {1u, 2u, 8u}) {
        RunConfig c;
        c.sim_sizes = {500};
        c.sim_m = 2000;
        c.sim_reps = 16;
        c.seed = 11;
        c.threads = th;
        c.sim_constraint_x1_unmeasured = true;
        c.out = (root / ("sim" + std::to_string(th))).string();
        if (cmd_simulate(c, sink) != kExitOk) return {false, "cmd_simulate failed"};
        sim_outputs.push_back(slurp(fs::path(c.out) / "sim_bias.csv") + slurp(fs::path(c.out) / "sim_types.csv"));
    }
    Rng rng = stream_rng(1111, 0);
    const StackedDataset d = with_singleton_clusters(gen_dataset(rng, 500, 1000, 8.0));
    PipelineConfig cfg;
    cfg.sampling_set = {"X4", "X5"};
    cfg.estimators = {EstimatorKind::ipw, EstimatorKind::aipw, EstimatorKind::sate_dim};
    for (unsigned th : {1u, 2u, 8u}) {
        BootstrapOptions opt;
        opt.replicates = 40;
        opt.seed = 3;
        opt.threads = th;
        const BootstrapReport rep = cluster_bootstrap(d, make_pipeline(cfg), opt);
        boot_outputs.push_back(to_json(rep) + selection_csv(rep));
    }
    fs::remove_all(root);
    const bool sim_same = sim_outputs[0] == sim_outputs[1] && sim_outputs[0] == sim_outputs[2];
    const bool boot_same = boot_outputs[0] == boot_outputs[1] && boot_outputs[0] == boot_outputs[2];
    return {sim_same && boot_same, std::string("simulate tables ") + (sim_same ? "identical" : "DIFFER") +
                                       " at 1/2/8 threads; bootstrap report " + (boot_same ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"C1 simulation bias", c1_bias},
        {"C2 naive benchmark bias", c2_naive},
        {"C3 minimal-set selection frequency", c3_selection},
        {"C4 constrained selection shift", c4_constrained},
        {"C5 consistency", c5_consistency},
        {"C6 cover solver vs exhaustive search", c6_solver},
        {"C7 separation soundness", c7_soundness},
        {"C8 lasso correctness", c8_lasso},
        {"C9 covariate generator fidelity", c9_generator},
        {"C10 estimator identities", c10_identities},
        {"C11 determinism", c11_determinism},
    };
    std::set<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        const std::string id = name.substr(0, name.find(' '));
        if (!wanted.empty() && !wanted.count(id)) continue;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
