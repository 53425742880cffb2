#pragma once

#include <vector>

#include "ibgan/dataio.hpp"
#include "ibgan/tape.hpp"

namespace ibgan::nets {

using nd::Array;
using nd::NodeId;
using nd::Rng;
using nd::Tape;

/// Architecture knobs shared by the triplet. Widths are desk-scale defaults;
/// init_scale 0 selects Glorot-uniform initialization, a positive value
/// selects normal(0, init_scale).
struct NetSpec {
    std::size_t conv_channels = 32;
    std::size_t conv2_filter = 3;
    std::size_t dense_width = 64;
    std::size_t hidden_width = 256;
    double leaky_slope = 0.2;
    double tanh_scale = 3.0;
    double init_scale = 0.0;
};

/// Conv classifier: conv1d(c, f=min(k,m)) -> leaky -> conv1d(c, f2) -> leaky
/// -> global average over time -> [metadata] -> dense -> leaky -> dense(|Y|)
/// -> softmax. Output rows sum to 1.
struct ClassifierNet {
    NetSpec spec;
    std::size_t k = 0, m = 0, d_meta = 0;
    int classes = 0;
    Array conv1_k, conv1_b, conv2_k, conv2_b, w1, b1, w2, b2;

    std::vector<Array*> params();
    std::vector<const Array*> params() const;
};

/// Conditional imputer: concat(x_mask, I, one-hot Y') -> dense -> leaky ->
/// dense -> leaky -> dense(flat) -> tanh * tanh_scale. Observed components
/// are merged back by the caller (pass-through invariant).
struct GeneratorNet {
    NetSpec spec;
    std::size_t flat_dim = 0;
    int classes = 0;
    Array w1, b1, w2, b2, w3, b3;

    std::vector<Array*> params();
    std::vector<const Array*> params() const;
};

/// Element-wise scorer: concat(x, one-hot) -> dense -> leaky -> dense ->
/// leaky -> dense(flat) -> sigmoid. Output[j] estimates the probability that
/// component j is real (not a masked imputation).
struct DiscriminatorNet {
    NetSpec spec;
    std::size_t flat_dim = 0;
    int classes = 0;
    Array w1, b1, w2, b2, w3, b3;

    std::vector<Array*> params();
    std::vector<const Array*> params() const;
};

ClassifierNet build_classifier(const NetSpec& spec, std::size_t k, std::size_t m,
                               std::size_t d_meta, int classes, Rng& rng);
GeneratorNet build_generator(const NetSpec& spec, std::size_t flat_dim, int classes, Rng& rng);
DiscriminatorNet build_discriminator(const NetSpec& spec, std::size_t flat_dim, int classes,
                                     Rng& rng);

/// [n, classes] one-hot rows.
Array one_hot(const std::vector<int>& labels, int classes);

/// Tape forwards. `pids` must come from lifting params() in order (leaves
/// for the net being trained, constants otherwise).
NodeId classifier_forward(Tape& t, const ClassifierNet& net, const std::vector<NodeId>& pids,
                          NodeId series /*[n,k,m]*/, NodeId meta /*[n,d_meta] or -1 when d=0*/);
NodeId generator_forward(Tape& t, const GeneratorNet& net, const std::vector<NodeId>& pids,
                         NodeId x_mask /*[n,flat]*/, NodeId mask /*[n,flat]*/,
                         NodeId labels_one_hot /*[n,classes]*/);
NodeId discriminator_forward(Tape& t, const DiscriminatorNet& net, const std::vector<NodeId>& pids,
                             NodeId x /*[n,flat]*/, NodeId labels_one_hot);

/// Classifier forward on a flat [n, flat] node (series and metadata packed);
/// reshapes internally. Used on generator output.
NodeId classifier_forward_flat(Tape& t, const ClassifierNet& net, const std::vector<NodeId>& pids,
                               NodeId flat);

/// Lift all of a net's parameters onto a tape.
template <typename Net>
std::vector<NodeId> lift_params(Tape& t, const Net& net, bool trainable) {
    std::vector<NodeId> ids;
    for (const Array* p : net.params()) {
        ids.push_back(trainable ? t.leaf(*p) : t.constant(*p));
    }
    return ids;
}

/// Inference-only classifier probabilities for a batch of samples.
Array classifier_probs(const ClassifierNet& net, const data::Dataset& ds,
                       const std::vector<std::size_t>& indices);

}  // namespace ibgan::nets
