#pragma once

#include "gensep/data.hpp"
#include "gensep/graph.hpp"
#include "gensep/lasso.hpp"

#include <string>

namespace gensep {

/// Post-fit coefficient thresholding of each nodewise regression.
/// loh_wainwright zeroes slopes below sqrt(d) * |beta|_2 * sqrt(log(p) / n),
/// with d the number of nonzero slopes, p the node count, n the row count.
enum class ThresholdRule { none, loh_wainwright };

struct MgmOptions {
    EdgeRule rule = EdgeRule::and_rule;
    double gamma = 0.25;           ///< EBIC sparsity exponent
    int lambda_count = 50;
    double lambda_ratio = 0.01;    ///< smallest lambda as a fraction of lambda_max
    ThresholdRule threshold_rule = ThresholdRule::loh_wainwright;
    double threshold = 0.0;        ///< additional absolute cut on selected coefficients
    std::size_t min_experiment = 20;
    unsigned threads = 1;
    std::string outcome_name = "Y";
    std::string treatment_name = "T";
    LassoOptions lasso;
};

/// Estimates a pairwise mixed Markov random field on the experiment rows by
/// l1-penalized nodewise regression. Nodes are the covariates (in dataset
/// order), then the outcome when `include_y`, then the treatment. Continuous
/// nodes are regressed with a gaussian model, binary ones (and the treatment)
/// with a logistic model, categorical ones with a multinomial model. Each
/// regression picks its lambda by EBIC. An edge's weight is the mean of the
/// two directed magnitudes, each the largest |coefficient| in the block
/// linking the pair.
///
/// Throws ArgumentError below `min_experiment` rows and NumericalError
/// naming the node whose regression failed.
MarkovGraph fit_mgm(const StackedDataset& data, bool include_y, const MgmOptions& options = {});

}  // namespace gensep
