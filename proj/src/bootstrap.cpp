#include "gensep/bootstrap.hpp"

#include "gensep/error.hpp"
#include "gensep/parallel.hpp"
#include "gensep/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace gensep {

std::vector<PateEstimate> estimate_with_set(const StackedDataset& data, const std::vector<std::string>& w,
                                            const std::vector<EstimatorKind>& estimators,
                                            std::optional<double> treatment_probability,
                                            std::optional<double> weight_cap) {
    std::vector<PateEstimate> out;
    std::optional<Eigen::VectorXd> pi;
    std::optional<std::vector<double>> p;
    auto weights = [&]() -> const Eigen::VectorXd& {
        if (!pi) pi = compute_weights(fit_sampling_model(data, w), weight_cap);
        return *pi;
    };
    auto probs = [&]() -> const std::vector<double>& {
        if (!p) p = treatment_probabilities(data, treatment_probability);
        return *p;
    };
    for (auto kind : estimators) {
        PateEstimate est;
        switch (kind) {
            case EstimatorKind::ipw: est = ipw_pate(data, weights(), probs()); break;
            case EstimatorKind::outcome_model: est = outcome_model_pate(data, w); break;
            case EstimatorKind::aipw: est = aipw_pate(data, w, weights(), probs()); break;
            case EstimatorKind::sate_dim: est = sate_dim(data); break;
        }
        if (kind != EstimatorKind::sate_dim) est.set_used = w;
        out.push_back(std::move(est));
    }
    return out;
}

SeparatingSetSolution solve_sepset(const StackedDataset& data, const PipelineConfig& config) {
    if (config.mode == SepsetMode::marginal) {
        return estimate_marginal_sepset(data, config.sampling_set, config.unmeasured, config.sepset);
    }
    return estimate_exact_sepset(data, config.sampling_set, config.heterogeneity_set, config.unmeasured,
                                 config.sepset);
}

ReplicateResult run_pipeline(const StackedDataset& data, const PipelineConfig& config) {
    const SeparatingSetSolution sol = solve_sepset(data, config);
    ReplicateResult result;
    result.status = sol.status;
    result.selected = sol.selected;
    if (!sol.usable()) return result;
    result.estimates =
        estimate_with_set(data, sol.selected, config.estimators, config.treatment_probability, config.weight_cap);
    return result;
}

Pipeline make_pipeline(PipelineConfig config) {
    return [config = std::move(config)](const StackedDataset& data) { return run_pipeline(data, config); };
}

StackedDataset with_singleton_clusters(const StackedDataset& data) {
    std::vector<std::string> cluster(data.rows());
    for (std::size_t i = 0; i < data.n_experiment(); ++i) cluster[i] = std::to_string(i);
    std::optional<double> big_n;
    if (data.weighting_adjusted()) big_n = data.population_size();
    StackedDataset out(data.specs(), data.covariates(), data.s(), data.t(), data.y(), std::move(cluster), big_n);
    out.propensity = data.propensity;
    out.strata = data.strata;
    return out;
}

StackedDataset bootstrap_sample(const StackedDataset& data, std::uint64_t seed, std::uint64_t index,
                                bool resample_population) {
    if (!data.has_cluster()) throw ArgumentError("the cluster bootstrap needs a cluster column");
    const std::size_t n = data.n_experiment(), m = data.m_population();

    // clusters in order of first appearance
    std::vector<std::vector<std::size_t>> members;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = slot.emplace(data.cluster()[i], members.size());
        if (fresh) members.emplace_back();
        members[it->second].push_back(i);
    }

    Rng rng = stream_rng(seed, index);
    std::uniform_int_distribution<std::size_t> pick_cluster(0, members.size() - 1);
    std::vector<std::size_t> exp_rows;
    exp_rows.reserve(n);
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& rows = members[pick_cluster(rng)];
        exp_rows.insert(exp_rows.end(), rows.begin(), rows.end());
    }
    std::vector<std::size_t> pop_rows(m);
    if (resample_population && m > 0) {
        std::uniform_int_distribution<std::size_t> pick_row(n, n + m - 1);
        for (auto& r : pop_rows) r = pick_row(rng);
    } else {
        for (std::size_t j = 0; j < m; ++j) pop_rows[j] = n + j;
    }
    return take_rows(data, exp_rows, pop_rows);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapReport cluster_bootstrap(const StackedDataset& data, const Pipeline& pipeline,
                                  const BootstrapOptions& options) {
    if (!data.has_cluster()) throw ArgumentError("the cluster bootstrap needs a cluster column");
    if (options.replicates < 2) throw ArgumentError("the bootstrap needs at least two replicates");

    BootstrapReport report;
    report.replicates = options.replicates;
    report.full_sample = pipeline(data);

    report.detail.resize(options.replicates);
    parallel_for(options.replicates, options.threads, [&](std::size_t b) {
        ReplicateResult& slot = report.detail[b];
        try {
            slot = pipeline(bootstrap_sample(data, options.seed, b, options.resample_population));
        } catch (const NumericalError& e) {
            slot = ReplicateResult{};
            slot.failed = true;
            slot.failure = e.what();
        }
    });

    std::vector<EstimatorKind> kinds;
    auto note_kinds = [&](const ReplicateResult& r) {
        for (const auto& e : r.estimates) {
            if (std::find(kinds.begin(), kinds.end(), e.estimator) == kinds.end()) kinds.push_back(e.estimator);
        }
    };
    note_kinds(report.full_sample);
    for (const auto& r : report.detail) note_kinds(r);

    const auto names = data.covariate_names();
    std::vector<std::size_t> picks(names.size(), 0);
    std::vector<std::vector<double>> values(kinds.size());
    for (const auto& r : report.detail) {
        if (r.failed) {
            ++report.failed;
            continue;
        }
        if (r.status == SepsetStatus::infeasible) {
            ++report.infeasible;
            continue;
        }
        ++report.feasible;
        ++report.set_size_histogram[r.selected.size()];
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (std::find(r.selected.begin(), r.selected.end(), names[j]) != r.selected.end()) ++picks[j];
        }
        for (const auto& e : r.estimates) {
            const auto k = static_cast<std::size_t>(std::find(kinds.begin(), kinds.end(), e.estimator) - kinds.begin());
            values[k].push_back(e.point);
        }
    }
    report.infeasible_proportion = static_cast<double>(report.infeasible) / static_cast<double>(report.replicates);
    if (report.infeasible == report.replicates) {
        throw InfeasibleError("every bootstrap replicate was infeasible");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
        const double f = report.feasible == 0 ? 0.0
                                              : static_cast<double>(picks[j]) / static_cast<double>(report.feasible);
        report.selection_frequency.emplace_back(names[j], f);
    }

    for (std::size_t k = 0; k < kinds.size(); ++k) {
        EstimateSummary s;
        s.estimator = kinds[k];
        for (const auto& e : report.full_sample.estimates) {
            if (e.estimator == kinds[k]) s.point = e.point;
        }
        auto& v = values[k];
        s.used = v.size();
        if (v.size() >= 2) {
            // shifted by the first value so identical replicates give exactly zero
            const double shift = v.front();
            double mean = 0.0;
            for (double x : v) mean += x - shift;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - shift - mean) * (x - shift - mean);
            s.se = std::sqrt(ss / static_cast<double>(v.size() - 1));
            std::sort(v.begin(), v.end());
            s.ci_low = quantile_sorted(v, 0.025);
            s.ci_high = quantile_sorted(v, 0.975);
        }
        report.estimates.push_back(s);
    }
    return report;
}

void attach_intervals(std::vector<PateEstimate>& estimates, const BootstrapReport& report) {
    for (auto& e : estimates) {
        for (const auto& s : report.estimates) {
            if (s.estimator != e.estimator) continue;
            e.se = s.se;
            e.ci_low = s.ci_low;
            e.ci_high = s.ci_high;
        }
    }
}

std::string to_json(const BootstrapReport& report) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json estimates = json::array();
    for (const auto& s : report.estimates) {
        estimates.push_back({{"estimator", to_string(s.estimator)},
                             {"point", opt(s.point)},
                             {"se", opt(s.se)},
                             {"ci_low", opt(s.ci_low)},
                             {"ci_high", opt(s.ci_high)},
                             {"replicates_used", s.used}});
    }
    json freq = json::object();
    for (const auto& [name, f] : report.selection_frequency) freq[name] = f;
    json hist = json::object();
    for (const auto& [size, count] : report.set_size_histogram) hist[std::to_string(size)] = count;
    json doc{{"B", report.replicates},
             {"full_sample", {{"status", to_string(report.full_sample.status)}, {"selected", report.full_sample.selected}}},
             {"feasible", report.feasible},
             {"infeasible", report.infeasible},
             {"failed", report.failed},
             {"infeasible_proportion", report.infeasible_proportion},
             {"estimates", estimates},
             {"selection_frequency", freq},
             {"set_size_distribution", hist}};
    return doc.dump(2) + "\n";
}

std::string selection_csv(const BootstrapReport& report) {
    std::ostringstream out;
    out << "variable,frequency\n" << std::setprecision(17);
    for (const auto& [name, f] : report.selection_frequency) out << name << ',' << f << '\n';
    return out.str();
}

}  // namespace gensep
