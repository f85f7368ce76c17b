#include "gensep/cli.hpp"

#include "gensep/error.hpp"
#include "gensep/mgm.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace gensep {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw ArgumentError("'" + key + "' expects a number, got '" + value + "'");
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
        throw ArgumentError("'" + key + "' expects a nonnegative integer, got '" + value + "'");
    }
    errno = 0;
    const unsigned long long v = std::strtoull(value.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ArgumentError("'" + key + "' is out of range");
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ArgumentError("'" + key + "' expects true or false, got '" + value + "'");
}

std::optional<double> to_optional_double(const std::string& key, const std::string& value) {
    if (value.empty() || value == "none") return std::nullopt;
    return to_double(key, value);
}

std::vector<EstimatorKind> to_estimators(const std::string& value) {
    std::vector<EstimatorKind> out;
    for (const auto& name : split_list(value)) out.push_back(parse_estimator(name));
    if (out.empty()) throw ArgumentError("at least one estimator is required");
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

std::vector<std::string> read_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
        if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        for (auto& c : split_list(line)) {
            if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
            cols.push_back(c);
        }
        return cols;
    }
    throw SchemaError("'" + path + "' has no header");
}

std::filesystem::path out_path(const RunConfig& config, const char* name) {
    return std::filesystem::path(config.out) / name;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys{
        {"experiment_csv", "experiment data file (rows with S=1)"},
        {"population_csv", "target population data file (rows with S=0)"},
        {"outcome", "outcome column (default Y)"},
        {"treatment", "treatment column, 0/1 (default T)"},
        {"cluster", "cluster column for the block bootstrap (optional)"},
        {"strata", "randomization strata column (optional)"},
        {"propensity", "per-row Pr(T=1) column in the experiment file (optional)"},
        {"covariates", "covariate columns; default: every other experiment column"},
        {"categorical", "categorical covariates as name:levels, comma separated"},
        {"sampling_set", "variables explaining selection into the experiment"},
        {"heterogeneity_set", "variables explaining effect heterogeneity (exact mode)"},
        {"unmeasured", "covariates not measured in the population; never selected"},
        {"mode", "marginal or exact"},
        {"estimators", "any of ipw, outcome_model, aipw, sate_dim (alias naive)"},
        {"B", "bootstrap replicates; 0 skips the bootstrap"},
        {"seed", "master random seed"},
        {"N", "declared size of the target population (default n + m)"},
        {"rule", "edge rule, AND or OR"},
        {"gamma", "EBIC sparsity exponent"},
        {"path_cap", "maximum number of enumerated simple paths"},
        {"lambda_count", "penalty grid length"},
        {"lambda_ratio", "smallest penalty as a fraction of the largest"},
        {"threshold", "zero fitted coefficients below this magnitude"},
        {"min_experiment", "minimum experiment rows for graph estimation"},
        {"threads", "worker threads (0: all cores); results do not depend on it"},
        {"treatment_probability", "constant Pr(T=1) when no propensity or strata column is given"},
        {"weight_cap", "upper clip for generalization weights (default none)"},
        {"resample_population", "resample population rows in the bootstrap (true/false)"},
        {"out", "output directory"},
        {"sim_sizes", "simulation experiment sizes, comma separated"},
        {"sim_m", "simulation population size"},
        {"sim_pool_factor", "simulation sampling pool size as a multiple of n"},
        {"sim_reps", "simulation replicates per size"},
        {"sim_constraint_x1_unmeasured", "also solve with X1 declared unmeasured (true/false)"},
        {"sim_estimate_sets", "estimate separating sets in the simulation (true/false)"},
        {"sim_estimators", "simulation estimators: ipw, outcome_model, aipw, naive"},
    };
    return keys;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "experiment_csv") c.experiment_csv = value;
    else if (key == "population_csv") c.population_csv = value;
    else if (key == "outcome") c.outcome = value;
    else if (key == "treatment") c.treatment = value;
    else if (key == "cluster") c.cluster = value;
    else if (key == "strata") c.strata = value;
    else if (key == "propensity") c.propensity = value;
    else if (key == "covariates") c.covariates = split_list(value);
    else if (key == "categorical") c.categorical = split_list(value);
    else if (key == "sampling_set") c.sampling_set = split_list(value);
    else if (key == "heterogeneity_set") c.heterogeneity_set = split_list(value);
    else if (key == "unmeasured") c.unmeasured = split_list(value);
    else if (key == "mode") {
        if (value == "marginal") c.mode = SepsetMode::marginal;
        else if (value == "exact") c.mode = SepsetMode::exact;
        else throw ArgumentError("'mode' must be marginal or exact, got '" + value + "'");
    } else if (key == "estimators") c.estimators = to_estimators(value);
    else if (key == "B") c.bootstrap_replicates = to_unsigned(key, value);
    else if (key == "seed") c.seed = to_unsigned(key, value);
    else if (key == "N") c.population_size = to_optional_double(key, value);
    else if (key == "rule") {
        if (value == "AND" || value == "and") c.rule = EdgeRule::and_rule;
        else if (value == "OR" || value == "or") c.rule = EdgeRule::or_rule;
        else throw ArgumentError("'rule' must be AND or OR, got '" + value + "'");
    } else if (key == "gamma") c.gamma = to_double(key, value);
    else if (key == "path_cap") c.path_cap = to_unsigned(key, value);
    else if (key == "lambda_count") c.lambda_count = static_cast<int>(to_unsigned(key, value));
    else if (key == "lambda_ratio") c.lambda_ratio = to_double(key, value);
    else if (key == "threshold") c.threshold = to_double(key, value);
    else if (key == "min_experiment") c.min_experiment = to_unsigned(key, value);
    else if (key == "threads") c.threads = static_cast<unsigned>(to_unsigned(key, value));
    else if (key == "treatment_probability") c.treatment_probability = to_optional_double(key, value);
    else if (key == "weight_cap") c.weight_cap = to_optional_double(key, value);
    else if (key == "resample_population") c.resample_population = to_bool(key, value);
    else if (key == "out") c.out = value;
    else if (key == "sim_sizes") {
        c.sim_sizes.clear();
        for (const auto& s : split_list(value)) c.sim_sizes.push_back(to_unsigned(key, s));
    } else if (key == "sim_m") c.sim_m = to_unsigned(key, value);
    else if (key == "sim_pool_factor") c.sim_pool_factor = to_double(key, value);
    else if (key == "sim_reps") c.sim_reps = to_unsigned(key, value);
    else if (key == "sim_constraint_x1_unmeasured") c.sim_constraint_x1_unmeasured = to_bool(key, value);
    else if (key == "sim_estimate_sets") c.sim_estimate_sets = to_bool(key, value);
    else if (key == "sim_estimators") c.sim_estimators = to_estimators(value);
    else throw ArgumentError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ArgumentError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        try {
            apply_setting(base, key, line.substr(eq + 1));
        } catch (const ArgumentError& e) {
            throw ArgumentError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

Schema schema_from_config(const RunConfig& c) {
    if (c.experiment_csv.empty()) throw ArgumentError("experiment_csv is required");
    if (c.population_csv.empty()) throw ArgumentError("population_csv is required");
    Schema schema;
    schema.outcome = c.outcome;
    schema.treatment = c.treatment;
    if (!c.cluster.empty()) {
        schema.cluster = c.cluster;
        schema.require_cluster = true;
    }
    if (!c.strata.empty()) schema.strata = c.strata;
    if (!c.propensity.empty()) schema.propensity = c.propensity;
    schema.population_size = c.population_size;

    std::vector<std::string> names = c.covariates;
    if (names.empty()) {
        for (const auto& col : read_header(c.experiment_csv)) {
            if (col == c.outcome || col == c.treatment || col == c.cluster || col == c.strata || col == c.propensity) {
                continue;
            }
            names.push_back(col);
        }
    }
    std::vector<std::pair<std::string, int>> categorical;
    for (const auto& entry : c.categorical) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos) throw ArgumentError("categorical entry '" + entry + "' must be name:levels");
        const std::string name = trim(entry.substr(0, colon));
        const auto levels = to_unsigned("categorical", trim(entry.substr(colon + 1)));
        if (levels < 2) throw ArgumentError("categorical '" + name + "' needs at least two levels");
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw ArgumentError("categorical '" + name + "' is not a covariate");
        }
        categorical.emplace_back(name, static_cast<int>(levels));
    }
    for (const auto& u : c.unmeasured) {
        if (std::find(names.begin(), names.end(), u) == names.end()) {
            throw ArgumentError("unmeasured variable '" + u + "' is not an experiment covariate");
        }
    }
    for (const auto& name : names) {
        const bool in_population = std::find(c.unmeasured.begin(), c.unmeasured.end(), name) == c.unmeasured.end();
        auto cat = std::find_if(categorical.begin(), categorical.end(), [&](const auto& p) { return p.first == name; });
        schema.covariates.push_back(cat == categorical.end() ? VariableSpec::continuous(name, in_population)
                                                             : VariableSpec::categorical(name, cat->second, in_population));
    }
    return schema;
}

PipelineConfig pipeline_from_config(const RunConfig& c) {
    if (c.sampling_set.empty()) throw ArgumentError("sampling_set is required");
    if (c.mode == SepsetMode::exact && c.heterogeneity_set.empty()) {
        throw ArgumentError("mode = exact requires a nonempty heterogeneity_set");
    }
    PipelineConfig p;
    p.mode = c.mode;
    p.sampling_set = c.sampling_set;
    p.heterogeneity_set = c.heterogeneity_set;
    p.unmeasured = c.unmeasured;
    p.sepset.path_cap = c.path_cap;
    p.sepset.mgm.rule = c.rule;
    p.sepset.mgm.gamma = c.gamma;
    p.sepset.mgm.lambda_count = c.lambda_count;
    p.sepset.mgm.lambda_ratio = c.lambda_ratio;
    p.sepset.mgm.threshold = c.threshold;
    p.sepset.mgm.min_experiment = c.min_experiment;
    p.sepset.mgm.outcome_name = c.outcome;
    p.sepset.mgm.treatment_name = c.treatment;
    p.sepset.mgm.threads = 1;
    p.estimators = c.estimators;
    p.treatment_probability = c.treatment_probability;
    p.weight_cap = c.weight_cap;
    return p;
}

SimConfig sim_from_config(const RunConfig& c) {
    SimConfig s;
    s.sizes = c.sim_sizes;
    s.m = c.sim_m;
    s.pool_factor = c.sim_pool_factor;
    s.reps = c.sim_reps;
    s.seed = c.seed;
    s.constraint_x1_unmeasured = c.sim_constraint_x1_unmeasured;
    s.estimators = c.sim_estimators;
    s.estimate_sets = c.sim_estimate_sets;
    s.threads = c.threads;
    s.path_cap = c.path_cap;
    s.mgm.rule = c.rule;
    s.mgm.gamma = c.gamma;
    s.mgm.lambda_count = c.lambda_count;
    s.mgm.lambda_ratio = c.lambda_ratio;
    s.mgm.threshold = c.threshold;
    s.mgm.min_experiment = c.min_experiment;
    validate(s);
    return s;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw InputError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot move output into place at '" + path + "'");
    }
}

int cmd_estimate(const RunConfig& config, std::ostream& log) {
    const PipelineConfig pipeline = pipeline_from_config(config);
    if (config.bootstrap_replicates == 1) throw ArgumentError("B must be 0 or at least 2");
    const Schema schema = schema_from_config(config);
    StackedDataset data = load_csv(config.experiment_csv, config.population_csv, schema);
    std::filesystem::create_directories(config.out);
    if (data.dropped_experiment_rows + data.dropped_population_rows > 0) {
        log << "dropped rows with missing values: " << data.dropped_experiment_rows << " experiment, "
            << data.dropped_population_rows << " population\n";
    }

    const SeparatingSetSolution sol = solve_sepset(data, pipeline);
    log << "separating set (" << to_string(sol.mode) << ", " << to_string(sol.status) << "): {" << join(sol.selected)
        << "}\n";
    if (!sol.usable()) {
        write_file_atomic(out_path(config, "sepset.json"), to_json(sol));
        write_file_atomic(out_path(config, "estimates.json"), to_json(config.outcome, {}));
        log << "no separating set avoids the unmeasured variables\n";
        return kExitInfeasible;
    }

    std::vector<PateEstimate> estimates = estimate_with_set(data, sol.selected, pipeline.estimators,
                                                            pipeline.treatment_probability, pipeline.weight_cap);
    std::optional<BootstrapReport> report;
    int code = kExitOk;
    if (config.bootstrap_replicates >= 2) {
        const StackedDataset boot_data = data.has_cluster() ? data : with_singleton_clusters(data);
        BootstrapOptions options;
        options.replicates = config.bootstrap_replicates;
        options.seed = config.seed;
        options.threads = config.threads;
        options.resample_population = config.resample_population;
        try {
            report = cluster_bootstrap(boot_data, make_pipeline(pipeline), options);
            attach_intervals(estimates, *report);
        } catch (const InfeasibleError& e) {
            log << e.what() << "\n";
            code = kExitInfeasible;
        }
    }

    for (const auto& e : estimates) {
        log << to_string(e.estimator) << ": " << e.point;
        if (e.se) log << " (se " << *e.se << ", 95% CI " << *e.ci_low << " to " << *e.ci_high << ")";
        log << "\n";
    }
    write_file_atomic(out_path(config, "sepset.json"), to_json(sol));
    write_file_atomic(out_path(config, "estimates.json"), to_json(config.outcome, estimates));
    if (report) {
        write_file_atomic(out_path(config, "bootstrap.json"), to_json(*report));
        write_file_atomic(out_path(config, "selection.csv"), selection_csv(*report));
        log << "infeasible bootstrap share: " << report->infeasible_proportion << "\n";
    }
    return code;
}

int cmd_graph(const RunConfig& config, std::ostream& log) {
    const Schema schema = schema_from_config(config);
    const StackedDataset data = load_csv(config.experiment_csv, config.population_csv, schema);
    PipelineConfig p;
    p.sepset.mgm.rule = config.rule;
    p.sepset.mgm.gamma = config.gamma;
    p.sepset.mgm.lambda_count = config.lambda_count;
    p.sepset.mgm.lambda_ratio = config.lambda_ratio;
    p.sepset.mgm.threshold = config.threshold;
    p.sepset.mgm.min_experiment = config.min_experiment;
    p.sepset.mgm.outcome_name = config.outcome;
    p.sepset.mgm.treatment_name = config.treatment;
    p.sepset.mgm.threads = config.threads;

    const MarkovGraph full = fit_mgm(data, true, p.sepset.mgm);
    const MarkovGraph reduced = remove_node(full, config.treatment);
    std::filesystem::create_directories(config.out);

    nlohmann::json doc{{"with_treatment", nlohmann::json::parse(to_edge_json(full))},
                       {"without_treatment", nlohmann::json::parse(to_edge_json(reduced))}};
    std::string dot = to_dot(full);
    std::string dot_reduced = to_dot(reduced);
    if (const auto pos = dot_reduced.find("graph mrf"); pos != std::string::npos) {
        dot_reduced.replace(pos, 9, "graph mrf_without_treatment");
    }
    write_file_atomic(out_path(config, "graph.dot"), dot + dot_reduced);
    write_file_atomic(out_path(config, "graph.json"), doc.dump(2) + "\n");
    log << "graph: " << full.size() << " nodes, " << full.edge_count() << " edges (" << reduced.edge_count()
        << " without " << config.treatment << ")\n";
    return kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    const SimConfig sim = sim_from_config(config);
    const SimResult result = run_simulation(sim);
    std::filesystem::create_directories(config.out);
    write_file_atomic(out_path(config, "sim_bias.csv"), sim_bias_csv(result));
    write_file_atomic(out_path(config, "sim_types.csv"), sim_types_csv(result));
    for (const auto& row : result.bias) {
        if (row.set_type != "all") continue;
        log << "n=" << row.n << " " << to_string(row.estimator) << " [" << row.set_kind << "] bias " << row.bias
            << " se " << row.se << " rmse " << row.rmse << "\n";
    }
    return kExitOk;
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& log, std::ostream& err) {
    try {
        if (command == "estimate") return cmd_estimate(config, log);
        if (command == "graph") return cmd_graph(config, log);
        if (command == "simulate") return cmd_simulate(config, log);
        err << "error: unknown command '" << command << "'\n";
        return kExitInput;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace gensep
