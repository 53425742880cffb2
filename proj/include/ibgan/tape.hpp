#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ibgan/array.hpp"

namespace ibgan::nd {

using NodeId = std::int32_t;

/// Record of primitive operations for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so creation order is a topological
/// order: every node's inputs precede it. backward() runs one sweep from the
/// loss node down to the leaves and accumulates exact reverse-mode gradients.
/// Everything is 64-bit and single-threaded; a fixed tape always yields
/// bit-identical gradients.
class Tape {
public:
    /// Leaf that participates in differentiation (parameters, probed inputs).
    NodeId leaf(Array value);

    /// Leaf treated as a constant; no gradient is stored or propagated.
    NodeId constant(Array value);

    const Array& value(NodeId id) const { return node(id).value; }
    const Array& grad(NodeId id) const;
    bool needs_grad(NodeId id) const { return node(id).needs_grad; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Reverse sweep from a scalar loss node. Rejects ids not on the tape
    /// and non-scalar outputs. Grads of all prior nodes are reset first.
    void backward(NodeId loss);

    // ---- primitive operations ----

    /// out[i,j] = sum_k x[i,k] * w[k,j] + b[j]
    NodeId affine(NodeId x, NodeId w, NodeId b);

    /// Cross-correlation over the time axis (no kernel flip), zero padding.
    /// x: [n,k,m], kernels: [c_out,k,f], bias: [c_out] -> [n,c_out,m'].
    NodeId conv1d(NodeId x, NodeId kernels, NodeId bias, std::size_t stride,
                  std::size_t padding);

    NodeId relu(NodeId x);
    NodeId leaky_relu(NodeId x, double slope = 0.2);
    NodeId sigmoid(NodeId x);
    NodeId tanh_act(NodeId x);
    /// Row-wise softmax of a 2-D array; rows sum to 1 within 1e-12.
    NodeId softmax_rows(NodeId x);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    /// a*x + b elementwise with scalar coefficients.
    NodeId axpb(NodeId x, double a, double b);
    NodeId log(NodeId x);
    /// Pass-through gradient inside [lo, hi], zero outside.
    NodeId clamp(NodeId x, double lo, double hi);

    NodeId sum(NodeId x);
    NodeId mean(NodeId x);

    /// Concatenate 2-D arrays along columns.
    NodeId concat_cols(NodeId a, NodeId b);
    /// Columns [lo, hi) of a 2-D array.
    NodeId slice_cols(NodeId x, std::size_t lo, std::size_t hi);
    NodeId reshape(NodeId x, std::vector<std::size_t> shape);

    /// out[i] = probs[i, labels[i]] for a 2-D probability array.
    NodeId pick_per_row(NodeId probs, const std::vector<int>& labels);

    /// [n,c,m] -> [n,c], mean over the time axis.
    NodeId global_avg_time(NodeId x);

    /// out[i] = mask[i] == 1 ? replacement[i] : base[i]. base and mask are
    /// constants; gradient flows into replacement only where mask is 1.
    /// Exact pass-through: kept components are bit-identical to base.
    NodeId masked_merge(const Array& base, NodeId replacement, const Array& mask);

private:
    struct Node {
        Array value;
        Array grad;  // allocated iff needs_grad
        bool needs_grad = false;
        std::function<void(Tape&)> backprop;  // empty for leaves/constants
    };

    Node& node(NodeId id);
    const Node& node(NodeId id) const;
    NodeId push(Array value, bool needs_grad, std::function<void(Tape&)> backprop);
    Array& grad_mut(NodeId id) { return node(id).grad; }

    std::vector<Node> nodes_;
};

/// Bias-corrected Adam. Accumulators mirror parameter shapes; t advances by
/// exactly one per update call.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long t = 0;
    std::vector<Array> m;
    std::vector<Array> v;

    static AdamState for_params(const std::vector<Array*>& params, double lr = 1e-3,
                                double beta1 = 0.9, double beta2 = 0.999,
                                double epsilon = 1e-8);
};

/// One Adam step in place. Throws on non-finite gradients (divergence).
void adam_update(const std::vector<Array*>& params, const std::vector<Array>& grads,
                 AdamState& state);

/// Builds a scalar loss on a fresh tape from parameter leaves, in order.
using LossBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

/// Max over all parameter components of
///   |analytic - central difference| / max(1, |analytic|).
/// eps must lie in (0, 1e-2]. The finite-difference side only evaluates the
/// forward pass, so it is independent of the backward implementation.
double grad_check(const LossBuilder& build, const std::vector<Array>& params,
                  double eps);

/// Convenience: forward value and per-parameter gradients in one call.
std::pair<double, std::vector<Array>> loss_and_grads(const LossBuilder& build,
                                                     const std::vector<Array>& params);

}  // namespace ibgan::nd
