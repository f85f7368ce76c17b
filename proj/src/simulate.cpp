#include "gensep/simulate.hpp"

#include "gensep/bootstrap.hpp"
#include "gensep/error.hpp"
#include "gensep/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace gensep {

namespace {

using Eigen::Index;

const std::vector<std::string> kSampling{"X4", "X5"};
const std::vector<std::string> kHeterogeneity{"X2", "X3"};
const std::vector<std::string> kMinimum{"X1"};

bool contains_all(const std::vector<std::string>& set, const std::vector<std::string>& sub) {
    return std::all_of(sub.begin(), sub.end(),
                       [&](const auto& s) { return std::find(set.begin(), set.end(), s) != set.end(); });
}

}  // namespace

const std::vector<std::string>& sim_covariate_names() {
    static const std::vector<std::string> names{"X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9"};
    return names;
}

Eigen::MatrixXd sim_reference_correlation() {
    Eigen::MatrixXd c(9, 9);
    c << 1.00, -0.70, 0.70, 0.70, -0.20, 0.00, 0.00, 0.50, -0.70,
        -0.70, 1.00, -0.50, -0.50, 0.15, 0.00, 0.00, -0.70, 0.50,
        0.70, -0.50, 1.00, 0.50, -0.15, 0.00, 0.00, 0.33, -0.50,
        0.70, -0.50, 0.50, 1.00, -0.15, 0.00, 0.00, 0.33, -0.50,
        -0.21, 0.15, -0.15, -0.15, 1.00, 0.00, 0.00, -0.10, 0.30,
        0.00, 0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.00, 0.00,
        0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 1.00, 0.00, 0.00,
        0.50, -0.70, 0.33, 0.33, -0.10, 0.00, 0.00, 1.00, -0.33,
        -0.70, 0.50, -0.50, -0.50, 0.30, 0.00, 0.00, -0.33, 1.00;
    return c;
}

Eigen::MatrixXd gen_covariates(Rng& rng, std::size_t size) {
    if (size == 0) throw ArgumentError("gen_covariates: size must be positive");
    std::normal_distribution<double> z;
    const double r7 = std::sqrt(1.0 - 0.49), r3 = std::sqrt(1.0 - 0.09);
    Eigen::MatrixXd x(static_cast<Index>(size), 9);
    for (Index i = 0; i < x.rows(); ++i) {
        const double x1 = z(rng);
        const double x2 = -0.7 * x1 + r7 * z(rng);
        const double x3 = 0.7 * x1 + r7 * z(rng);
        const double x4 = 0.7 * x1 + r7 * z(rng);
        const double x9 = -0.7 * x1 + r7 * z(rng);
        const double x5 = 0.3 * x9 + r3 * z(rng);
        const double x6 = z(rng);
        const double x7 = z(rng);
        const double x8 = -0.7 * x2 + r7 * z(rng);
        x.row(i) << x1, x2, x3, x4, x5, x6, x7, x8, x9;
    }
    return x;
}

double potential_outcome(double x2, double x3, double x6, double x8, int t, double eps) noexcept {
    return 5.0 * t + 10.0 * x3 * t - 10.0 * x2 * t + x6 - 3.0 * x8 + eps;
}

Eigen::VectorXd gen_outcomes(Rng& rng, const Eigen::MatrixXd& x, const std::vector<int>& t) {
    if (static_cast<std::size_t>(x.rows()) != t.size()) throw ArgumentError("gen_outcomes: length mismatch");
    std::normal_distribution<double> z;
    Eigen::VectorXd y(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const int ti = t[static_cast<std::size_t>(i)];
        if (ti != 0 && ti != 1) throw ArgumentError("gen_outcomes: treatment must be 0 or 1");
        y(i) = potential_outcome(x(i, 1), x(i, 2), x(i, 5), x(i, 7), ti, z(rng));
    }
    return y;
}

Eigen::VectorXd sampling_probabilities(const Eigen::MatrixXd& pool) {
    if (pool.cols() != 9) throw ArgumentError("sampling_probabilities: expected nine covariate columns");
    const Eigen::VectorXd lp = -20.0 * pool.col(3) + 20.0 * pool.col(4);
    const double mean = lp.mean();
    double ss = 0.0;
    for (Index i = 0; i < lp.size(); ++i) ss += (lp(i) - mean) * (lp(i) - mean);
    const double sd = lp.size() > 1 ? std::sqrt(ss / static_cast<double>(lp.size() - 1)) : 0.0;
    if (!(sd > 0.0)) throw DegenerateVariableError("S_lp", "sampling linear predictor has zero spread");
    Eigen::VectorXd p(lp.size());
    for (Index i = 0; i < lp.size(); ++i) p(i) = 1.0 / (1.0 + std::exp(-0.25 * (lp(i) - mean) / sd));
    return p;
}

SamplingDraw gen_sampling(Rng& rng, const Eigen::MatrixXd& pool, std::size_t n) {
    if (static_cast<std::size_t>(pool.rows()) < n) throw ArgumentError("gen_sampling: pool smaller than n");
    SamplingDraw draw;
    draw.probability = sampling_probabilities(pool);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index i = 0; i < pool.rows() && draw.selected.size() < n; ++i) {
        if (u(rng) < draw.probability(i)) draw.selected.push_back(static_cast<std::size_t>(i));
    }
    if (draw.selected.size() < n) {
        throw ArgumentError("sampling pool exhausted after " + std::to_string(draw.selected.size()) + " of " +
                            std::to_string(n) + " members; raise pool_factor");
    }
    return draw;
}

StackedDataset gen_dataset(Rng& rng, std::size_t n, std::size_t m, double pool_factor) {
    const auto pool_size = static_cast<std::size_t>(std::ceil(pool_factor * static_cast<double>(n)));
    const Eigen::MatrixXd pool = gen_covariates(rng, pool_size);
    const SamplingDraw draw = gen_sampling(rng, pool, n);
    const Eigen::MatrixXd population = gen_covariates(rng, m);

    std::bernoulli_distribution coin(0.5);
    Eigen::MatrixXd x(static_cast<Index>(n + m), 9);
    std::vector<int> s(n + m, 0), t(n + m, -1);
    std::vector<double> y(n + m, std::numeric_limits<double>::quiet_NaN());
    Eigen::MatrixXd xe(static_cast<Index>(n), 9);
    std::vector<int> te(n);
    for (std::size_t i = 0; i < n; ++i) {
        xe.row(static_cast<Index>(i)) = pool.row(static_cast<Index>(draw.selected[i]));
        te[i] = coin(rng) ? 1 : 0;
    }
    const Eigen::VectorXd ye = gen_outcomes(rng, xe, te);
    x.topRows(static_cast<Index>(n)) = xe;
    x.bottomRows(static_cast<Index>(m)) = population;
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = 1;
        t[i] = te[i];
        y[i] = ye(static_cast<Index>(i));
    }
    std::vector<VariableSpec> specs;
    for (const auto& name : sim_covariate_names()) specs.push_back(VariableSpec::continuous(name));
    return StackedDataset(std::move(specs), std::move(x), std::move(s), std::move(t), std::move(y));
}

MarkovGraph sim_true_graph() {
    std::vector<std::string> names = sim_covariate_names();
    names.push_back("Y");
    names.push_back("T");
    std::vector<std::pair<std::string, std::string>> edges{{"X1", "X2"}, {"X1", "X3"}, {"X1", "X4"}, {"X1", "X9"},
                                                           {"X9", "X5"}, {"X2", "X8"}, {"X4", "X5"}};
    const std::vector<std::string> parents{"X2", "X3", "X6", "X8", "T"};
    for (std::size_t i = 0; i < parents.size(); ++i) {
        edges.emplace_back("Y", parents[i]);
        for (std::size_t j = i + 1; j < parents.size(); ++j) {
            if (!(parents[i] == "X2" && parents[j] == "X8")) edges.emplace_back(parents[i], parents[j]);
        }
    }
    return MarkovGraph::from_edges(std::move(names), edges);
}

const char* to_string(SetType type) noexcept {
    switch (type) {
        case SetType::min_sepset: return "min_sepset";
        case SetType::similar_sampling: return "similar_sampling";
        case SetType::similar_heterogeneity: return "similar_heterogeneity";
        case SetType::other_appropriate: return "other_appropriate";
        case SetType::inappropriate: return "inappropriate";
    }
    return "unknown";
}

SetType classify_set(SepsetStatus status, const std::vector<std::string>& selected) {
    if (status == SepsetStatus::infeasible) return SetType::inappropriate;
    static const MarkovGraph graph = remove_node(sim_true_graph(), "T");
    std::vector<std::string> targets;
    for (const auto& s : kSampling) {
        if (std::find(selected.begin(), selected.end(), s) == selected.end()) targets.push_back(s);
    }
    if (!is_separated(graph, {"Y"}, targets, selected)) return SetType::inappropriate;
    if (contains_all(selected, kMinimum)) return SetType::min_sepset;
    if (contains_all(selected, kSampling)) return SetType::similar_sampling;
    if (contains_all(selected, kHeterogeneity)) return SetType::similar_heterogeneity;
    return SetType::other_appropriate;
}

void validate(const SimConfig& config) {
    if (config.sizes.empty()) throw ArgumentError("simulation needs at least one sample size");
    for (auto n : config.sizes) {
        if (n < 100) throw ArgumentError("simulation sample sizes must be at least 100");
    }
    if (config.reps < 1) throw ArgumentError("simulation needs at least one replicate");
    if (!(config.pool_factor >= 1.0)) throw ArgumentError("pool_factor must be at least 1");
    if (config.m < 1) throw ArgumentError("population size m must be positive");
    if (config.estimators.empty()) throw ArgumentError("simulation needs at least one estimator");
}

namespace {

SimReplicate run_replicate(const SimConfig& config, std::size_t n, std::size_t rep) {
    Rng rng = stream_rng(config.seed, (static_cast<std::uint64_t>(n) << 32) | rep);
    const StackedDataset data = gen_dataset(rng, n, config.m, config.pool_factor);

    SimReplicate out;
    out.n = n;
    out.rep = rep;
    std::vector<EstimatorKind> adjusted;
    bool naive = false;
    for (auto k : config.estimators) {
        if (k == EstimatorKind::sate_dim) {
            naive = true;
        } else if (std::find(adjusted.begin(), adjusted.end(), k) == adjusted.end()) {
            adjusted.push_back(k);
        }
    }

    auto estimate = [&](const std::string& kind, const std::vector<std::string>& w) {
        if (adjusted.empty()) return;
        for (const auto& e : estimate_with_set(data, w, adjusted)) out.estimates.push_back({kind, e.estimator, e.point});
    };
    estimate("oracle_sampling", kSampling);
    estimate("oracle_heterogeneity", kHeterogeneity);
    estimate("oracle_minimum", kMinimum);

    if (config.estimate_sets) {
        MgmOptions mgm = config.mgm;
        mgm.threads = 1;
        auto record = [&](const std::string& kind, auto&& solve) {
            SimSetOutcome set;
            set.set_kind = kind;
            try {
                const SeparatingSetSolution sol = solve();
                set.status = sol.status;
                set.selected = sol.selected;
            } catch (const NumericalError&) {
                set.failed = true;
                set.status = SepsetStatus::infeasible;
            }
            set.type = classify_set(set.status, set.selected);
            if (set.status != SepsetStatus::infeasible) {
                try {
                    estimate(kind, set.selected);
                } catch (const NumericalError&) {
                    set.failed = true;
                }
            }
            out.sets.push_back(std::move(set));
        };

        std::optional<MarkovGraph> with_y;
        try {
            with_y = remove_node(fit_mgm(data, true, mgm), "T");
        } catch (const NumericalError&) {
        }
        auto marginal = [&](const std::vector<std::string>& excluded) {
            if (!with_y) throw NumericalError("graph estimation failed");
            return marginal_sepset_from_graph(*with_y, "Y", kSampling, excluded, config.path_cap);
        };
        record("estimated_marginal", [&] { return marginal({}); });
        record("estimated_exact", [&] {
            const MarkovGraph g = remove_node(fit_mgm(data, false, mgm), "T");
            return exact_sepset_from_graph(g, kHeterogeneity, kSampling, {}, config.path_cap);
        });
        if (config.constraint_x1_unmeasured) {
            record("estimated_marginal_x1_unmeasured", [&] { return marginal({"X1"}); });
        }
    }
    if (naive) out.estimates.push_back({"none", EstimatorKind::sate_dim, sate_dim(data).point});
    return out;
}

BiasRow summarize(std::size_t n, EstimatorKind estimator, const std::string& kind, const std::string& type,
                  const std::vector<double>& values) {
    BiasRow row;
    row.n = n;
    row.estimator = estimator;
    row.set_kind = kind;
    row.set_type = type;
    row.reps = values.size();
    if (values.empty()) return row;
    double sum = 0.0, sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += (v - kTruePate) * (v - kTruePate);
    }
    row.mean = sum / static_cast<double>(values.size());
    row.bias = row.mean - kTruePate;
    row.rmse = std::sqrt(sq / static_cast<double>(values.size()));
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - row.mean) * (v - row.mean);
        row.se = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return row;
}

}  // namespace

SimResult run_simulation(const SimConfig& config) {
    validate(config);
    SimResult result;
    result.replicates.resize(config.sizes.size() * config.reps);
    parallel_for(result.replicates.size(), config.threads, [&](std::size_t k) {
        const std::size_t n = config.sizes[k / config.reps];
        result.replicates[k] = run_replicate(config, n, k % config.reps);
    });

    for (std::size_t si = 0; si < config.sizes.size(); ++si) {
        const std::size_t n = config.sizes[si];
        const auto first = result.replicates.begin() + static_cast<std::ptrdiff_t>(si * config.reps);
        const auto last = first + static_cast<std::ptrdiff_t>(config.reps);

        // estimates keyed by (set kind, estimator) in first-seen order
        std::vector<std::pair<std::string, EstimatorKind>> keys;
        std::map<std::pair<std::string, EstimatorKind>, std::vector<double>> all;
        std::map<std::tuple<std::string, EstimatorKind, SetType>, std::vector<double>> by_type;
        std::vector<std::string> set_kinds;
        std::map<std::string, std::map<SetType, std::size_t>> type_counts;
        std::map<std::string, std::size_t> exact_min;

        for (auto it = first; it != last; ++it) {
            std::map<std::string, SetType> rep_types;
            for (const auto& s : it->sets) {
                if (std::find(set_kinds.begin(), set_kinds.end(), s.set_kind) == set_kinds.end()) {
                    set_kinds.push_back(s.set_kind);
                }
                rep_types[s.set_kind] = s.type;
                ++type_counts[s.set_kind][s.type];
                if (s.status != SepsetStatus::infeasible && s.selected == kMinimum) ++exact_min[s.set_kind];
            }
            for (const auto& e : it->estimates) {
                const auto key = std::make_pair(e.set_kind, e.estimator);
                if (!all.count(key)) keys.push_back(key);
                all[key].push_back(e.point);
                if (auto t = rep_types.find(e.set_kind); t != rep_types.end()) {
                    by_type[{e.set_kind, e.estimator, t->second}].push_back(e.point);
                }
            }
        }
        for (const auto& key : keys) {
            result.bias.push_back(summarize(n, key.second, key.first, "all", all[key]));
            if (std::find(set_kinds.begin(), set_kinds.end(), key.first) == set_kinds.end()) continue;
            for (auto type : kSetTypes) {
                auto found = by_type.find({key.first, key.second, type});
                if (found == by_type.end()) continue;
                result.bias.push_back(summarize(n, key.second, key.first, to_string(type), found->second));
            }
        }
        for (const auto& kind : set_kinds) {
            for (auto type : kSetTypes) {
                TypeRow row;
                row.n = n;
                row.set_kind = kind;
                row.type = type;
                row.count = type_counts[kind][type];
                row.frequency = static_cast<double>(row.count) / static_cast<double>(config.reps);
                result.types.push_back(row);
            }
            result.exact_minimum.emplace_back(n, kind,
                                              static_cast<double>(exact_min[kind]) / static_cast<double>(config.reps));
        }
    }
    return result;
}

const BiasRow* SimResult::find_bias(std::size_t n, EstimatorKind estimator, const std::string& set_kind,
                                    const std::string& set_type) const {
    for (const auto& row : bias) {
        if (row.n == n && row.estimator == estimator && row.set_kind == set_kind && row.set_type == set_type) {
            return &row;
        }
    }
    return nullptr;
}

double SimResult::type_frequency(std::size_t n, const std::string& set_kind, SetType type) const {
    for (const auto& row : types) {
        if (row.n == n && row.set_kind == set_kind && row.type == type) return row.frequency;
    }
    return 0.0;
}

double SimResult::exact_minimum_frequency(std::size_t n, const std::string& set_kind) const {
    for (const auto& [rn, kind, f] : exact_minimum) {
        if (rn == n && kind == set_kind) return f;
    }
    return 0.0;
}

std::string sim_bias_csv(const SimResult& result) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "n,estimator,set_kind,set_type,reps,mean,bias,se,rmse\n";
    for (const auto& r : result.bias) {
        out << r.n << ',' << to_string(r.estimator) << ',' << r.set_kind << ',' << r.set_type << ',' << r.reps << ','
            << r.mean << ',' << r.bias << ',' << r.se << ',' << r.rmse << '\n';
    }
    return out.str();
}

std::string sim_types_csv(const SimResult& result) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "n,set_kind,type,count,frequency,exact_minimum_frequency\n";
    for (const auto& r : result.types) {
        out << r.n << ',' << r.set_kind << ',' << to_string(r.type) << ',' << r.count << ',' << r.frequency << ','
            << result.exact_minimum_frequency(r.n, r.set_kind) << '\n';
    }
    return out.str();
}

}  // namespace gensep
