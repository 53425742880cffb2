#pragma once

#include <vector>

#include "ibgan/dataio.hpp"

namespace ibgan::balance {

using data::ClassPriors;
using data::Dataset;
using nd::Array;
using nd::Rng;

/// How the mask pool picks classes.
///   inverse_prior: q_y proportional to 1/w_y (the printed rule).
///   exact_balance: q_y = 2/|Y| - w_y, which makes the real+mask union
///   exactly uniform when feasible (all w_y <= 2/|Y|).
enum class MaskPoolRule { inverse_prior, exact_balance };

/// Per-class selection probabilities for the mask pool.
std::vector<double> mask_pool_probs(const ClassPriors& priors,
                                    MaskPoolRule rule = MaskPoolRule::inverse_prior);

/// Indices into the training dataset; both pools are drawn with replacement
/// and carry the true labels of the drawn samples.
struct BatchPair {
    std::vector<std::size_t> real;       // uniform over all training samples
    std::vector<std::size_t> mask_pool;  // class by mask_pool_probs, then uniform within
};

BatchPair weighted_resample(const Dataset& ds, const ClassPriors& priors, std::size_t n_mb,
                            Rng& rng, MaskPoolRule rule = MaskPoolRule::inverse_prior);

/// Component-wise indicator, 1 = masked. I.i.d. Bernoulli(p_miss) draws,
/// independent of any data values (MCAR).
struct Mask {
    Array indicator;
};

Mask draw_mask(std::vector<std::size_t> shape, double p_miss, Rng& rng);

/// x_mask = x o (1-I) + z o I, evaluated component-wise so that unmasked
/// components are bit-identical to x.
Array apply_mask(const Array& x, const Mask& mask, const Array& z);

/// I.i.d. standard normal noise; callers standardize data first so the
/// noise is on data scale.
Array noise(std::vector<std::size_t> shape, Rng& rng);

}  // namespace ibgan::balance
