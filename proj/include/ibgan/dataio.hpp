#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ibgan/array.hpp"
#include "ibgan/rng.hpp"

namespace ibgan::data {

using nd::Array;
using nd::Rng;

/// One k-channel, length-m series with optional metadata and an integer
/// label in [0, class_count).
struct Sample {
    Array series;    // [k, m]
    Array metadata;  // [d_B]; zero-size allowed
    int label = 0;
};

/// Per-channel standardization statistics (population sd, constant channels
/// recorded with sd = 1). Metadata dimensions get the same treatment.
struct ChannelStats {
    std::vector<double> mean, sd;
    std::vector<double> meta_mean, meta_sd;
};

struct Dataset {
    std::vector<Sample> samples;
    int class_count = 0;
    std::vector<std::string> label_names;  // original labels by class index
    std::optional<ChannelStats> stats;     // set once standardized

    std::size_t size() const { return samples.size(); }
    std::size_t channels() const { return samples.empty() ? 0 : samples[0].series.shape[0]; }
    std::size_t length() const { return samples.empty() ? 0 : samples[0].series.shape[1]; }
    std::size_t meta_dim() const { return samples.empty() ? 0 : samples[0].metadata.size(); }
    std::size_t flat_dim() const { return channels() * length() + meta_dim(); }

    std::vector<std::size_t> class_counts() const;
    /// Sample indices grouped by class.
    std::vector<std::vector<std::size_t>> class_members() const;
};

struct ClassPriors {
    std::vector<double> w;  // w_y > 0, sums to 1
};

/// Series components in row-major channel/time order, metadata appended.
Array flatten_sample(const Sample& s);

/// long_csv ingestion: header sample_id,channel,t,value,label[,meta_0..].
/// Labels are re-indexed to 0..|Y|-1 in first-appearance order. Missing
/// cells, non-numeric values, and inconsistent shapes are rejected with the
/// offending location.
Dataset load_dataset(const std::string& path);

/// Inverse of load_dataset on the same format.
void save_dataset(const Dataset& ds, const std::string& path);

ClassPriors compute_priors(const Dataset& ds);

struct ImbalanceResult {
    Dataset ds;
    std::vector<std::string> warnings;
};

/// Randomly drops `drop_fraction` of the samples of floor(|Y|/2) randomly
/// chosen classes. A class is never emptied; hitting that floor emits a
/// warning record instead.
ImbalanceResult inject_imbalance(const Dataset& ds, double drop_fraction, Rng& rng);

/// Standardizes each channel (and metadata dimension) to mean 0, sd 1 over
/// this dataset, recording the statistics for reuse on a held-out split.
Dataset standardize(const Dataset& ds);

/// Applies previously computed statistics (train-split reuse).
Dataset standardize_with(const Dataset& ds, const ChannelStats& stats);

struct SyntheticSpec {
    int classes = 2;
    std::size_t channels = 1;
    std::size_t length = 16;
    std::vector<double> ar_coeff;    // per class, |phi| < 1
    std::vector<double> class_mean;  // per class offset, all channels
    std::vector<std::size_t> sizes;  // per class
    double noise_sd = 1.0;
    std::size_t meta_dim = 0;        // optional metadata drawn around the class mean
};

/// Per-class AR(1) samples:
///   x_t = mu_y + phi_y * (x_{t-1} - mu_y) + noise_sd * eps_t.
Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng);

/// Stratified split; both sides keep every class or the call is rejected.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, Rng& rng);

/// Stratified subsample to ~target_size keeping class proportions (at least
/// one sample per class). Used by training-size sweeps.
Dataset subsample(const Dataset& ds, std::size_t target_size, Rng& rng);

}  // namespace ibgan::data
