#include "gensep/mgm.hpp"

#include "gensep/error.hpp"
#include "gensep/parallel.hpp"

#include <cmath>

namespace gensep {

namespace {

struct NodeBlock {
    std::string name;
    VariableKind kind = VariableKind::continuous;
    int levels = 1;
    Eigen::VectorXd response;  ///< standardized value or class label
    Eigen::MatrixXd design;    ///< standardized predictor columns
};

/// Standardizes in place; returns false for a constant column.
bool standardize_column(Eigen::Ref<Eigen::VectorXd> col) {
    const double n = static_cast<double>(col.size());
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / (n - 1.0));
    if (!(sd > 1e-12)) {
        col.setZero();
        return false;
    }
    col /= sd;
    return true;
}

NodeBlock make_block(std::string name, VariableKind kind, int levels, const Eigen::VectorXd& raw) {
    NodeBlock block;
    block.name = std::move(name);
    block.kind = kind;
    block.levels = levels;
    const Eigen::Index n = raw.size();
    if (kind == VariableKind::continuous) {
        block.design = raw;
        if (!standardize_column(block.design.col(0))) {
            throw NumericalError("node '" + block.name + "' is constant in the experiment");
        }
        block.response = block.design.col(0);
        return block;
    }
    block.response = raw;
    block.design.resize(n, levels - 1);
    for (int l = 1; l < levels; ++l) {
        for (Eigen::Index i = 0; i < n; ++i) block.design(i, l - 1) = raw[i] == l ? 1.0 : 0.0;
        standardize_column(block.design.col(l - 1));
    }
    return block;
}

/// Largest |coefficient| linking node r to every other node.
std::vector<double> fit_node(const std::vector<NodeBlock>& blocks, std::size_t r, const MgmOptions& opt) {
    const NodeBlock& target = blocks[r];
    const Eigen::Index n = target.response.size();
    Eigen::Index width = 0;
    for (std::size_t h = 0; h < blocks.size(); ++h) {
        if (h != r) width += blocks[h].design.cols();
    }
    Eigen::MatrixXd x(n, width);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges(blocks.size(), {0, 0});
    Eigen::Index at = 0;
    for (std::size_t h = 0; h < blocks.size(); ++h) {
        if (h == r) continue;
        const auto w = blocks[h].design.cols();
        x.middleCols(at, w) = blocks[h].design;
        ranges[h] = {at, w};
        at += w;
    }

    GlmFamily family = GlmFamily::gaussian();
    if (target.kind == VariableKind::categorical) {
        family = target.levels == 2 ? GlmFamily::binomial() : GlmFamily::multinomial(target.levels);
    }
    const Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
    std::vector<double> magnitude(blocks.size(), 0.0);
    if (width == 0) return magnitude;

    const double top = lambda_max(x, target.response, family, weights);
    if (!(top > 0.0)) return magnitude;
    const auto grid = lambda_grid(top, opt.lambda_count, opt.lambda_ratio);
    const LassoPath path = fit_path(x, target.response, family, weights, grid, opt.lasso);
    const std::size_t best = select_ebic(path, static_cast<double>(n), static_cast<double>(width), opt.gamma);
    const Eigen::MatrixXd& slopes = path.slopes[best];

    double cut = opt.threshold;
    if (opt.threshold_rule == ThresholdRule::loh_wainwright) {
        const double d = static_cast<double>((slopes.array() != 0.0).count());
        const double lw = std::sqrt(d) * slopes.norm() *
                          std::sqrt(std::log(static_cast<double>(blocks.size())) / static_cast<double>(n));
        cut = std::max(cut, lw);
    }

    for (std::size_t h = 0; h < blocks.size(); ++h) {
        if (h == r) continue;
        const auto [start, w] = ranges[h];
        double m = 0.0;
        for (Eigen::Index row = start; row < start + w; ++row) {
            for (Eigen::Index k = 0; k < slopes.cols(); ++k) {
                const double v = std::abs(slopes(row, k));
                if (v > 0.0 && v >= cut) m = std::max(m, v);
            }
        }
        magnitude[h] = m;
    }
    return magnitude;
}

}  // namespace

MarkovGraph fit_mgm(const StackedDataset& data, bool include_y, const MgmOptions& options) {
    const std::size_t n = data.n_experiment();
    if (n < options.min_experiment) {
        throw ArgumentError("fit_mgm needs at least " + std::to_string(options.min_experiment) +
                            " experiment rows, got " + std::to_string(n));
    }
    for (const auto& reserved : {options.outcome_name, options.treatment_name}) {
        if (data.has_covariate(reserved)) {
            throw ArgumentError("covariate name '" + reserved + "' collides with the outcome/treatment node name");
        }
    }
    const auto rows = static_cast<Eigen::Index>(n);
    std::vector<NodeBlock> blocks;
    try {
        for (std::size_t j = 0; j < data.specs().size(); ++j) {
            const auto& spec = data.specs()[j];
            blocks.push_back(make_block(spec.name, spec.kind, spec.level_count,
                                        data.covariates().col(static_cast<Eigen::Index>(j)).head(rows)));
        }
        if (include_y) {
            blocks.push_back(make_block(options.outcome_name, VariableKind::continuous, 1,
                                        Eigen::Map<const Eigen::VectorXd>(data.y().data(), rows)));
        }
        Eigen::VectorXd t(rows);
        for (Eigen::Index i = 0; i < rows; ++i) t[i] = data.t()[static_cast<std::size_t>(i)];
        blocks.push_back(make_block(options.treatment_name, VariableKind::categorical, 2, t));
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("fit_mgm: ") + e.what());
    }

    const std::size_t p = blocks.size();
    std::vector<std::vector<double>> magnitude(p);
    parallel_for(p, options.threads, [&](std::size_t r) {
        try {
            magnitude[r] = fit_node(blocks, r, options);
        } catch (const Error& e) {
            throw NumericalError("fit_mgm: regression for node '" + blocks[r].name + "' failed: " + e.what());
        }
    });

    std::vector<std::string> names;
    for (const auto& b : blocks) names.push_back(b.name);
    std::vector<std::vector<bool>> adj(p, std::vector<bool>(p, false));
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t h = r + 1; h < p; ++h) {
            const double a = magnitude[r][h], b = magnitude[h][r];
            const bool edge = options.rule == EdgeRule::and_rule ? (a > 0 && b > 0) : (a > 0 || b > 0);
            if (!edge) continue;
            adj[r][h] = adj[h][r] = true;
            weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(h)) = 0.5 * (a + b);
            weights(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(r)) = 0.5 * (a + b);
        }
    }
    return MarkovGraph(std::move(names), std::move(adj), std::move(weights), options.rule);
}

}  // namespace gensep
