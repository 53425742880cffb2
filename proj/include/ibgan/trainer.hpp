#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ibgan/balance.hpp"
#include "ibgan/dataio.hpp"
#include "ibgan/metrics.hpp"
#include "ibgan/nets.hpp"
#include "ibgan/tape.hpp"

namespace ibgan::train {

using balance::MaskPoolRule;
using data::ClassPriors;
using data::Dataset;
using nd::Array;
using nd::NodeId;
using nd::Rng;
using nd::Tape;

struct TrainConfig {
    double p_miss = 0.1;
    double alpha = 0.5;
    std::size_t n_mb = 32;
    std::size_t epochs = 20;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double w_d_cap = 20.0;
    std::uint64_t seed = 0;
    nets::NetSpec nets;
    MaskPoolRule mask_rule = MaskPoolRule::inverse_prior;

    void validate() const;  // throws on out-of-range fields
};

struct EpochLosses {
    std::size_t epoch = 0;  // 1-based
    double loss_d = 0.0;
    double loss_g_adv = 0.0;
    double loss_c_real = 0.0;
    double loss_c_fake = 0.0;
};

struct TripletState {
    nets::GeneratorNet gen;
    nets::DiscriminatorNet disc;
    nets::ClassifierNet clf;
    nd::AdamState opt_g, opt_d, opt_c;
    Rng rng{0};
    std::size_t epoch = 0;
    std::vector<EpochLosses> history;
};

/// One drawn mini-batch: the real pool plus the to-be-masked pool with its
/// mask, noise and masked vectors. Draw order is fixed (resample, then
/// mask, then noise) so runs are bit-reproducible.
struct StepBatch {
    Array real_series;  // [n,k,m]
    Array real_meta;    // [n,d_meta]; empty when d_meta = 0
    Array real_flat;    // [n,flat]
    std::vector<int> real_labels;
    Array x_mask;  // [n,flat] masked vectors
    Array mask;    // [n,flat] indicator
    std::vector<int> fake_labels;
    Array one_hot_real;  // [n,classes]
    Array one_hot_fake;
};

StepBatch make_step_batch(const Dataset& ds, const ClassPriors& priors, const TrainConfig& cfg,
                          Rng& rng);

// ---- loss formulas (tape builders; the array overloads below wrap them) ----

/// loss_D: every component of both batches contributes one log term; real
/// components target 1, fake-batch components target (1-I). Grand mean over
/// all contributing components, negated. Scores are clamped to
/// [1e-7, 1-1e-7] before logs.
NodeId loss_d_node(Tape& t, NodeId d_real, NodeId d_fake, const Array& mask);

/// Non-saturating generator objective: -mean over masked components of
/// log d_fake. Zero when nothing is masked.
NodeId loss_g_adv_node(Tape& t, NodeId d_fake, const Array& mask);

/// -(1/n) sum_i weights[i] * log(clamp(probs[i, labels[i]], 1e-12, 1)).
NodeId weighted_nll_node(Tape& t, NodeId probs, const std::vector<int>& labels,
                         const std::vector<double>& weights);

/// loss_C = alpha * nll(real) + (1-alpha) * nll(fake, w_D); w_D enters as a
/// constant (no gradient flows through it).
NodeId loss_c_node(Tape& t, NodeId c_real, const std::vector<int>& real_labels, NodeId c_fake,
                   const std::vector<int>& fake_labels, const std::vector<double>& w_d,
                   double alpha);

// ---- plain-array views of the same formulas ----

/// (loss_D, loss_G_adv) for given component score arrays and masks.
std::pair<double, double> gan_loss(const Array& d_real, const Array& d_fake, const Array& mask);

/// min(d/(1-d), cap), the odds of a sample-level discriminator score.
double discriminator_weights(double d_sample, double cap = 20.0);

double classifier_loss_alpha(const Array& c_real, const std::vector<int>& real_labels,
                             const Array& c_fake, const std::vector<int>& fake_labels,
                             const std::vector<double>& w_d, double alpha);

/// Per-sample mean of an [n,flat] component score array.
std::vector<double> sample_scores(const Array& component_scores);

// ---- training ----

TripletState init_triplet(const Dataset& ds, const TrainConfig& cfg);

/// One pass of ceil(N/n_mb) steps, updating D, then C (with fresh w_D), then
/// G per mini-batch. Appends the epoch's mean losses to the history.
void train_epoch(TripletState& state, const Dataset& ds, const ClassPriors& priors,
                 const TrainConfig& cfg);

TripletState train(const Dataset& ds_train, const TrainConfig& cfg);

/// Baseline path: classifier alone on shuffled mini-batches, cross-entropy
/// with optional per-class weights (empty = plain).
struct ClassifierRun {
    nets::ClassifierNet net;
    std::vector<EpochLosses> history;
};
ClassifierRun train_classifier(const Dataset& ds, const TrainConfig& cfg,
                               const std::vector<double>& class_weights);

/// Argmax predictions and macro metrics on a test set already standardized
/// with the training statistics.
metrics::MetricsReport evaluate(const nets::ClassifierNet& clf, const Dataset& ds_test);

/// Scalar loss builder for the composed triplet (loss_D + loss_G + loss_C)
/// over the concatenated parameter list [G..., D..., C...]; w_d is held
/// fixed. Used for end-to-end gradient checks.
nd::LossBuilder triplet_loss_builder(const nets::GeneratorNet& gen,
                                     const nets::DiscriminatorNet& disc,
                                     const nets::ClassifierNet& clf, const StepBatch& batch,
                                     const std::vector<double>& w_d, double alpha);

}  // namespace ibgan::train
