#pragma once

#include <vector>

#include "ibgan/dataio.hpp"

namespace ibgan::baselines {

using data::ClassPriors;
using data::Dataset;
using nd::Array;
using nd::Rng;

enum class BaselineKind { plain, class_weights, upsample, downsample, smote };

/// Mean-one normalized inverse-prior weights: v_y = 1 / (w_y * |Y|).
/// Sum over the dataset of v_{Y_i} equals N, and uniform priors give all
/// ones (plain cross-entropy).
std::vector<double> inverse_prior_weights(const ClassPriors& priors);

/// -mean_i v_{Y_i} log c_{Y_i}(x_i) with the normalized weights above.
double class_weighted_loss(const Array& probs, const std::vector<int>& labels,
                           const ClassPriors& priors);

/// Every class resampled with replacement up to the max class count;
/// originals all retained.
Dataset upsample(const Dataset& ds, Rng& rng);

/// Every class subsampled without replacement down to the min class count.
Dataset downsample(const Dataset& ds, Rng& rng);

struct SmoteResult {
    Dataset ds;
    std::vector<std::string> warnings;
};

/// Synthetic minority oversampling: each synthetic is x + u * (x_n - x) for
/// a uniformly drawn sample x, one of its k nearest same-class neighbors
/// x_n (Euclidean distance on the flattened vector), and u ~ Uniform(0,1).
/// Empty target_counts means balance every class to the max class count.
/// Size-1 classes fall back to duplication with a warning.
SmoteResult smote(const Dataset& ds, int k_neighbors, const std::vector<std::size_t>& target_counts,
                  Rng& rng);

}  // namespace ibgan::baselines
