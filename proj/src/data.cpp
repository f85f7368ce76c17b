#include "gensep/data.hpp"

#include "gensep/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace gensep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

CsvTable read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
            if (trim(line).empty()) continue;
            table.header = split_csv_line(line);
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != table.header.size()) {
            throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw InputError("'" + path + "' is empty");
    return table;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == ".";
}

double parse_number(const std::string& cell, const std::string& where) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw InputError(where + ": non-numeric cell '" + cell + "'");
    }
    return v;
}

int parse_level(const std::string& cell, const VariableSpec& spec, const std::string& where) {
    const double v = parse_number(cell, where);
    if (v != std::floor(v) || v < 0 || v >= spec.level_count) {
        throw InputError(where + ": categorical value '" + cell + "' out of range for '" + spec.name +
                         "' (levels 0.." + std::to_string(spec.level_count - 1) + ")");
    }
    return static_cast<int>(v);
}

std::size_t column_of(const CsvTable& table, const std::string& name, const std::string& path) {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
        throw SchemaError("'" + path + "' has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - table.header.begin());
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void validate_specs(const std::vector<VariableSpec>& specs) {
    std::set<std::string> seen;
    for (const auto& spec : specs) {
        if (spec.name.empty()) throw SchemaError("variable with empty name");
        if (!seen.insert(spec.name).second) throw SchemaError("duplicate variable name '" + spec.name + "'");
        if (spec.kind == VariableKind::continuous && spec.level_count != 1) {
            throw SchemaError("continuous variable '" + spec.name + "' must have level_count 1");
        }
        if (spec.kind == VariableKind::categorical && spec.level_count < 2) {
            throw SchemaError("categorical variable '" + spec.name + "' needs at least 2 levels");
        }
    }
}

}  // namespace

StackedDataset::StackedDataset(std::vector<VariableSpec> specs, Eigen::MatrixXd covariates,
                               std::vector<int> s, std::vector<int> t, std::vector<double> y,
                               std::vector<std::string> cluster, std::optional<double> population_size)
    : specs_(std::move(specs)), x_(std::move(covariates)), s_(std::move(s)), t_(std::move(t)),
      y_(std::move(y)), cluster_(std::move(cluster)) {
    validate_specs(specs_);
    const std::size_t rows = s_.size();
    if (static_cast<std::size_t>(x_.rows()) != rows || t_.size() != rows || y_.size() != rows) {
        throw ArgumentError("dataset columns have inconsistent lengths");
    }
    if (static_cast<std::size_t>(x_.cols()) != specs_.size()) {
        throw ArgumentError("covariate matrix width does not match the variable specs");
    }
    if (!cluster_.empty() && cluster_.size() != rows) {
        throw ArgumentError("cluster column length does not match row count");
    }
    bool in_population_block = false;
    for (std::size_t i = 0; i < rows; ++i) {
        const int si = s_[i];
        if (si != 0 && si != 1) throw ArgumentError("sampling indicator must be 0 or 1");
        if (si == 1) {
            if (in_population_block) throw ArgumentError("experiment rows must precede population rows");
            ++n_;
            if (t_[i] != 0 && t_[i] != 1) {
                throw ArgumentError("treatment must be 0 or 1 on experiment row " + std::to_string(i));
            }
            if (!std::isfinite(y_[i])) {
                throw ArgumentError("outcome missing on experiment row " + std::to_string(i));
            }
        } else {
            in_population_block = true;
            ++m_;
            if (t_[i] != -1 || !std::isnan(y_[i])) {
                throw ArgumentError("treatment/outcome must be absent on population row " + std::to_string(i));
            }
        }
        for (std::size_t j = 0; j < specs_.size(); ++j) {
            const auto& spec = specs_[j];
            const double v = x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const bool absent = std::isnan(v);
            if (si == 0 && !spec.measured_in_population) {
                if (!absent) {
                    throw ArgumentError("'" + spec.name + "' is unmeasured in the population but row " +
                                        std::to_string(i) + " has a value");
                }
                continue;
            }
            if (absent || !std::isfinite(v)) {
                throw ArgumentError("'" + spec.name + "' missing on row " + std::to_string(i));
            }
            if (spec.kind == VariableKind::categorical &&
                (v != std::floor(v) || v < 0 || v >= spec.level_count)) {
                throw ArgumentError("categorical value out of range for '" + spec.name + "'");
            }
        }
    }
    const double default_n = static_cast<double>(n_ + m_);
    big_n_ = population_size.value_or(default_n);
    if (big_n_ < default_n) {
        throw ArgumentError("population size N must be at least n + m");
    }
}

bool StackedDataset::weighting_adjusted() const noexcept {
    return big_n_ > static_cast<double>(n_ + m_);
}

std::size_t StackedDataset::covariate_index(const std::string& name) const {
    for (std::size_t j = 0; j < specs_.size(); ++j) {
        if (specs_[j].name == name) return j;
    }
    throw ArgumentError("unknown covariate '" + name + "'");
}

bool StackedDataset::has_covariate(const std::string& name) const noexcept {
    return std::any_of(specs_.begin(), specs_.end(), [&](const auto& s) { return s.name == name; });
}

std::vector<std::string> StackedDataset::covariate_names() const {
    std::vector<std::string> names;
    names.reserve(specs_.size());
    for (const auto& s : specs_) names.push_back(s.name);
    return names;
}

StackedDataset load_csv(const std::string& path_experiment, const std::string& path_population,
                        const Schema& schema) {
    validate_specs(schema.covariates);
    const CsvTable exp = read_table(path_experiment);
    const CsvTable pop = read_table(path_population);

    const std::size_t y_col = column_of(exp, schema.outcome, path_experiment);
    const std::size_t t_col = column_of(exp, schema.treatment, path_experiment);
    std::optional<std::size_t> c_col;
    if (schema.cluster) {
        c_col = column_of(exp, *schema.cluster, path_experiment);
    } else if (schema.require_cluster) {
        throw SchemaError("bootstrap requested but no cluster column configured");
    }
    std::optional<std::size_t> strata_col;
    if (schema.strata) strata_col = column_of(exp, *schema.strata, path_experiment);
    std::optional<std::size_t> p_col;
    if (schema.propensity) p_col = column_of(exp, *schema.propensity, path_experiment);

    std::vector<std::size_t> exp_cols, pop_cols;
    std::set<std::string> expected_pop, ignored_pop;
    for (const auto& spec : schema.covariates) {
        exp_cols.push_back(column_of(exp, spec.name, path_experiment));
        if (spec.measured_in_population) {
            pop_cols.push_back(column_of(pop, spec.name, path_population));
            expected_pop.insert(spec.name);
        } else {
            pop_cols.push_back(static_cast<std::size_t>(-1));
            ignored_pop.insert(spec.name);
        }
    }
    for (const auto& name : pop.header) {
        if (!expected_pop.count(name) && !ignored_pop.count(name)) {
            throw SchemaError("'" + path_population + "' has unexpected column '" + name +
                              "'; the population file holds only covariate columns");
        }
    }

    const std::size_t q = schema.covariates.size();
    std::vector<std::vector<double>> xs;
    std::vector<int> s, t;
    std::vector<double> y, prop;
    std::vector<std::string> cluster, strata;
    std::size_t dropped_exp = 0, dropped_pop = 0;

    for (std::size_t r = 0; r < exp.rows.size(); ++r) {
        const auto& row = exp.rows[r];
        const std::string where = path_experiment + ":" + std::to_string(exp.line_numbers[r]);
        bool missing = is_missing(row[y_col]) || is_missing(row[t_col]);
        for (auto c : exp_cols) missing = missing || is_missing(row[c]);
        if (c_col) missing = missing || is_missing(row[*c_col]);
        if (strata_col) missing = missing || is_missing(row[*strata_col]);
        if (p_col) missing = missing || is_missing(row[*p_col]);
        if (missing) {
            ++dropped_exp;
            continue;
        }
        std::vector<double> xr(q);
        for (std::size_t j = 0; j < q; ++j) {
            const auto& spec = schema.covariates[j];
            xr[j] = spec.kind == VariableKind::categorical
                        ? static_cast<double>(parse_level(row[exp_cols[j]], spec, where))
                        : parse_number(row[exp_cols[j]], where);
        }
        const double tv = parse_number(row[t_col], where);
        if (tv != 0.0 && tv != 1.0) throw InputError(where + ": treatment must be 0 or 1");
        xs.push_back(std::move(xr));
        s.push_back(1);
        t.push_back(static_cast<int>(tv));
        y.push_back(parse_number(row[y_col], where));
        if (c_col) cluster.push_back(row[*c_col]);
        strata.push_back(strata_col ? row[*strata_col] : std::string());
        prop.push_back(p_col ? parse_number(row[*p_col], where) : kNaN);
    }
    for (std::size_t r = 0; r < pop.rows.size(); ++r) {
        const auto& row = pop.rows[r];
        const std::string where = path_population + ":" + std::to_string(pop.line_numbers[r]);
        bool missing = false;
        for (std::size_t j = 0; j < q; ++j) {
            if (schema.covariates[j].measured_in_population) missing = missing || is_missing(row[pop_cols[j]]);
        }
        if (missing) {
            ++dropped_pop;
            continue;
        }
        std::vector<double> xr(q, kNaN);
        for (std::size_t j = 0; j < q; ++j) {
            const auto& spec = schema.covariates[j];
            if (!spec.measured_in_population) continue;
            xr[j] = spec.kind == VariableKind::categorical
                        ? static_cast<double>(parse_level(row[pop_cols[j]], spec, where))
                        : parse_number(row[pop_cols[j]], where);
        }
        xs.push_back(std::move(xr));
        s.push_back(0);
        t.push_back(-1);
        y.push_back(kNaN);
        if (c_col) cluster.emplace_back();
        strata.emplace_back();
        prop.push_back(kNaN);
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < q; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
    }
    StackedDataset data(schema.covariates, std::move(x), std::move(s), std::move(t), std::move(y),
                        std::move(cluster), schema.population_size);
    if (schema.strata) data.strata = std::move(strata);
    if (schema.propensity) data.propensity = std::move(prop);
    data.dropped_experiment_rows = dropped_exp;
    data.dropped_population_rows = dropped_pop;
    return data;
}

void write_csv(const StackedDataset& data, const std::string& path_experiment,
               const std::string& path_population, const Schema& schema) {
    const auto& specs = data.specs();
    auto cell = [&](std::size_t i, std::size_t j) {
        const double v = data.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (specs[j].kind == VariableKind::categorical) return std::to_string(static_cast<int>(v));
        return format_double(v);
    };
    {
        std::ofstream out(path_experiment);
        if (!out) throw InputError("cannot write '" + path_experiment + "'");
        for (const auto& spec : specs) out << spec.name << ',';
        out << schema.treatment << ',' << schema.outcome;
        if (schema.cluster && data.has_cluster()) out << ',' << *schema.cluster;
        if (schema.strata && !data.strata.empty()) out << ',' << *schema.strata;
        if (schema.propensity && !data.propensity.empty()) out << ',' << *schema.propensity;
        out << '\n';
        for (std::size_t i = 0; i < data.n_experiment(); ++i) {
            for (std::size_t j = 0; j < specs.size(); ++j) out << cell(i, j) << ',';
            out << data.t()[i] << ',' << format_double(data.y()[i]);
            if (schema.cluster && data.has_cluster()) out << ',' << data.cluster()[i];
            if (schema.strata && !data.strata.empty()) out << ',' << data.strata[i];
            if (schema.propensity && !data.propensity.empty()) out << ',' << format_double(data.propensity[i]);
            out << '\n';
        }
    }
    std::ofstream out(path_population);
    if (!out) throw InputError("cannot write '" + path_population + "'");
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        if (specs[j].measured_in_population) cols.push_back(j);
    }
    for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << specs[cols[k]].name;
    out << '\n';
    for (std::size_t i = data.n_experiment(); i < data.rows(); ++i) {
        for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cell(i, cols[k]);
        out << '\n';
    }
}

StackedDataset take_rows(const StackedDataset& data, const std::vector<std::size_t>& experiment_rows,
                         const std::vector<std::size_t>& population_rows) {
    const std::size_t total = experiment_rows.size() + population_rows.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(total), data.covariates().cols());
    std::vector<int> s, t;
    std::vector<double> y, prop;
    std::vector<std::string> cluster, strata;
    s.reserve(total);
    t.reserve(total);
    y.reserve(total);
    Eigen::Index out_row = 0;
    auto copy = [&](std::size_t src) {
        x.row(out_row++) = data.covariates().row(static_cast<Eigen::Index>(src));
        s.push_back(data.s()[src]);
        t.push_back(data.t()[src]);
        y.push_back(data.y()[src]);
        if (data.has_cluster()) cluster.push_back(data.cluster()[src]);
        if (!data.strata.empty()) strata.push_back(data.strata[src]);
        if (!data.propensity.empty()) prop.push_back(data.propensity[src]);
    };
    for (auto r : experiment_rows) {
        if (r >= data.n_experiment()) throw ArgumentError("take_rows: experiment index out of range");
        copy(r);
    }
    for (auto r : population_rows) {
        if (r < data.n_experiment() || r >= data.rows()) {
            throw ArgumentError("take_rows: population index out of range");
        }
        copy(r);
    }
    std::optional<double> big_n;
    if (data.weighting_adjusted()) big_n = data.population_size();
    StackedDataset out(data.specs(), std::move(x), std::move(s), std::move(t), std::move(y), std::move(cluster),
                       big_n);
    out.strata = std::move(strata);
    out.propensity = std::move(prop);
    return out;
}

std::pair<StackedDataset, StandardizeRecord> standardize(const StackedDataset& data) {
    const std::size_t n = data.n_experiment();
    if (n < 2) throw ArgumentError("standardize needs at least two experiment rows");
    auto moments = [n](auto&& value_at) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += value_at(i);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = value_at(i) - mean;
            ss += d * d;
        }
        return std::pair{mean, std::sqrt(ss / static_cast<double>(n - 1))};
    };

    StandardizeRecord rec;
    const auto& specs = data.specs();
    Eigen::MatrixXd x = data.covariates();
    rec.covariate_center.assign(specs.size(), 0.0);
    rec.covariate_scale.assign(specs.size(), 1.0);
    for (std::size_t j = 0; j < specs.size(); ++j) {
        if (specs[j].kind != VariableKind::continuous) continue;
        const auto col = static_cast<Eigen::Index>(j);
        auto [mean, sd] = moments([&](std::size_t i) { return x(static_cast<Eigen::Index>(i), col); });
        if (!(sd > 0.0) || sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            throw DegenerateVariableError(specs[j].name, "variable '" + specs[j].name +
                                                             "' has zero variance in the experiment");
        }
        rec.covariate_center[j] = mean;
        rec.covariate_scale[j] = sd;
        x.col(col) = (x.col(col).array() - mean) / sd;
    }
    auto [ymean, ysd] = moments([&](std::size_t i) { return data.y()[i]; });
    if (!(ysd > 0.0) || ysd <= 1e-12 * std::max(1.0, std::abs(ymean))) {
        throw DegenerateVariableError("outcome", "outcome has zero variance in the experiment");
    }
    rec.outcome_center = ymean;
    rec.outcome_scale = ysd;
    std::vector<double> y = data.y();
    for (std::size_t i = 0; i < n; ++i) y[i] = (y[i] - ymean) / ysd;

    StackedDataset out(specs, std::move(x), data.s(), data.t(), std::move(y), data.cluster(),
                       data.population_size());
    out.propensity = data.propensity;
    out.strata = data.strata;
    out.dropped_experiment_rows = data.dropped_experiment_rows;
    out.dropped_population_rows = data.dropped_population_rows;
    return {std::move(out), std::move(rec)};
}

StackedDataset StandardizeRecord::invert(const StackedDataset& standardized) const {
    Eigen::MatrixXd x = standardized.covariates();
    for (std::size_t j = 0; j < covariate_center.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        x.col(col) = x.col(col).array() * covariate_scale[j] + covariate_center[j];
    }
    std::vector<double> y = standardized.y();
    for (std::size_t i = 0; i < standardized.n_experiment(); ++i) y[i] = y[i] * outcome_scale + outcome_center;
    StackedDataset out(standardized.specs(), std::move(x), standardized.s(), standardized.t(), std::move(y),
                       standardized.cluster(), standardized.population_size());
    out.propensity = standardized.propensity;
    out.strata = standardized.strata;
    return out;
}

}  // namespace gensep
