#include <cmath>
#include <stdexcept>
#include <string>

#include "ibgan/tape.hpp"

namespace ibgan::nd {

AdamState AdamState::for_params(const std::vector<Array*>& params, double lr, double beta1,
                                double beta2, double epsilon) {
    AdamState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Array* p : params) {
        s.m.push_back(Array::zeros(p->shape));
        s.v.push_back(Array::zeros(p->shape));
    }
    return s;
}

void adam_update(const std::vector<Array*>& params, const std::vector<Array>& grads,
                 AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_update: parameter/gradient/state count mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Array& theta = *params[p];
        const Array& g = grads[p];
        require_same_shape(theta, g, "adam_update");
        Array& m = state.m[p];
        Array& v = state.v[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g.data[i];
            if (!std::isfinite(gi)) {
                throw std::runtime_error("adam_update: non-finite gradient in parameter " +
                                         std::to_string(p) + " at component " + std::to_string(i) +
                                         " (training diverged)");
            }
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            theta.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

std::pair<double, std::vector<Array>> loss_and_grads(const LossBuilder& build,
                                                     const std::vector<Array>& params) {
    Tape tape;
    std::vector<NodeId> ids;
    ids.reserve(params.size());
    for (const Array& p : params) ids.push_back(tape.leaf(p));
    const NodeId loss = build(tape, ids);
    tape.backward(loss);
    std::vector<Array> grads;
    grads.reserve(params.size());
    for (NodeId id : ids) grads.push_back(tape.grad(id));
    return {tape.value(loss).data[0], std::move(grads)};
}

double grad_check(const LossBuilder& build, const std::vector<Array>& params, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) {
        throw std::invalid_argument("grad_check: eps must lie in (0, 1e-2]");
    }
    auto eval = [&](const std::vector<Array>& p) {
        Tape tape;
        std::vector<NodeId> ids;
        ids.reserve(p.size());
        for (const Array& a : p) ids.push_back(tape.constant(a));
        const NodeId loss = build(tape, ids);
        return tape.value(loss).data[0];
    };
    auto [loss0, grads] = loss_and_grads(build, params);
    (void)loss0;
    double worst = 0.0;
    std::vector<Array> probe = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            const double orig = probe[p].data[i];
            probe[p].data[i] = orig + eps;
            const double lp = eval(probe);
            probe[p].data[i] = orig - eps;
            const double lm = eval(probe);
            probe[p].data[i] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double analytic = grads[p].data[i];
            const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace ibgan::nd
