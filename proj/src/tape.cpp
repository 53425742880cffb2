#include "ibgan/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ibgan::nd {

Tape::Node& Tape::node(NodeId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw std::invalid_argument("Tape: node " + std::to_string(id) + " is not on this tape");
    }
    return nodes_[static_cast<std::size_t>(id)];
}

const Tape::Node& Tape::node(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw std::invalid_argument("Tape: node " + std::to_string(id) + " is not on this tape");
    }
    return nodes_[static_cast<std::size_t>(id)];
}

NodeId Tape::push(Array value, bool needs_grad, std::function<void(Tape&)> backprop) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad = Array::zeros(n.value.shape);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Array value) { return push(std::move(value), true, {}); }

NodeId Tape::constant(Array value) { return push(std::move(value), false, {}); }

const Array& Tape::grad(NodeId id) const {
    const Node& n = node(id);
    if (!n.needs_grad) {
        throw std::invalid_argument("Tape: node has no gradient (constant)");
    }
    return n.grad;
}

void Tape::backward(NodeId loss) {
    Node& l = node(loss);
    if (l.value.size() != 1) {
        throw std::invalid_argument("Tape: backward requires a scalar loss node, got shape " +
                                    l.value.shape_str());
    }
    if (!l.needs_grad) {
        throw std::invalid_argument("Tape: loss does not depend on any differentiable leaf");
    }
    for (NodeId id = 0; id <= loss; ++id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.needs_grad) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
    }
    l.grad.data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.needs_grad && n.backprop) n.backprop(*this);
    }
}

// ---- helpers -----------------------------------------------------------

namespace {

bool any_grad(const Tape& t, std::initializer_list<NodeId> ids) {
    for (NodeId id : ids) {
        if (t.needs_grad(id)) return true;
    }
    return false;
}

}  // namespace

// ---- dense / conv ------------------------------------------------------

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
    const Array& xv = value(x);
    const Array& wv = value(w);
    const Array& bv = value(b);
    if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1) {
        throw std::invalid_argument("affine: expected x[n,d_in], w[d_in,d_out], b[d_out]");
    }
    const std::size_t n = xv.shape[0], din = xv.shape[1];
    const std::size_t dout = wv.shape[1];
    if (wv.shape[0] != din || bv.shape[0] != dout) {
        throw std::invalid_argument("affine: dimension mismatch x" + xv.shape_str() + " w" +
                                    wv.shape_str() + " b" + bv.shape_str());
    }
    Array out({n, dout}, std::vector<double>(n * dout));
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = &out.data[i * dout];
        for (std::size_t j = 0; j < dout; ++j) orow[j] = bv.data[j];
        const double* xrow = &xv.data[i * din];
        for (std::size_t k = 0; k < din; ++k) {
            const double xik = xrow[k];
            const double* wrow = &wv.data[k * dout];
            for (std::size_t j = 0; j < dout; ++j) orow[j] += xik * wrow[j];
        }
    }
    const bool ng = any_grad(*this, {x, w, b});
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, w, b, id, n, din, dout](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& xv2 = t.value(x);
            const Array& wv2 = t.value(w);
            if (t.needs_grad(x)) {
                Array& gx = t.grad_mut(x);
                for (std::size_t i = 0; i < n; ++i) {
                    const double* grow = &g.data[i * dout];
                    double* gxrow = &gx.data[i * din];
                    for (std::size_t k = 0; k < din; ++k) {
                        const double* wrow = &wv2.data[k * dout];
                        double acc = 0.0;
                        for (std::size_t j = 0; j < dout; ++j) acc += grow[j] * wrow[j];
                        gxrow[k] += acc;
                    }
                }
            }
            if (t.needs_grad(w)) {
                Array& gw = t.grad_mut(w);
                for (std::size_t i = 0; i < n; ++i) {
                    const double* xrow = &xv2.data[i * din];
                    const double* grow = &g.data[i * dout];
                    for (std::size_t k = 0; k < din; ++k) {
                        const double xik = xrow[k];
                        double* gwrow = &gw.data[k * dout];
                        for (std::size_t j = 0; j < dout; ++j) gwrow[j] += xik * grow[j];
                    }
                }
            }
            if (t.needs_grad(b)) {
                Array& gb = t.grad_mut(b);
                for (std::size_t i = 0; i < n; ++i) {
                    const double* grow = &g.data[i * dout];
                    for (std::size_t j = 0; j < dout; ++j) gb.data[j] += grow[j];
                }
            }
        };
    }
    return id;
}

NodeId Tape::conv1d(NodeId x, NodeId kernels, NodeId bias, std::size_t stride,
                    std::size_t padding) {
    const Array& xv = value(x);
    const Array& kv = value(kernels);
    const Array& bv = value(bias);
    if (xv.rank() != 3 || kv.rank() != 3 || bv.rank() != 1) {
        throw std::invalid_argument("conv1d: expected x[n,k,m], kernels[c_out,k,f], bias[c_out]");
    }
    if (stride == 0) throw std::invalid_argument("conv1d: stride must be positive");
    const std::size_t n = xv.shape[0], ch = xv.shape[1], m = xv.shape[2];
    const std::size_t cout = kv.shape[0], f = kv.shape[2];
    if (kv.shape[1] != ch) {
        throw std::invalid_argument("conv1d: kernel channels " + std::to_string(kv.shape[1]) +
                                    " != input channels " + std::to_string(ch));
    }
    if (bv.shape[0] != cout) throw std::invalid_argument("conv1d: bias length != c_out");
    const std::size_t padded = m + 2 * padding;
    if (f > padded) {
        throw std::invalid_argument("conv1d: filter length " + std::to_string(f) +
                                    " exceeds padded length " + std::to_string(padded));
    }
    const std::size_t mo = (padded - f) / stride + 1;

    Array out({n, cout, mo}, std::vector<double>(n * cout * mo, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < cout; ++o) {
            double* orow = &out.data[(i * cout + o) * mo];
            for (std::size_t t2 = 0; t2 < mo; ++t2) orow[t2] = bv.data[o];
            for (std::size_t c = 0; c < ch; ++c) {
                const double* xrow = &xv.data[(i * ch + c) * m];
                const double* krow = &kv.data[(o * ch + c) * f];
                for (std::size_t t2 = 0; t2 < mo; ++t2) {
                    const std::ptrdiff_t base =
                        static_cast<std::ptrdiff_t>(t2 * stride) - static_cast<std::ptrdiff_t>(padding);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < f; ++j) {
                        const std::ptrdiff_t u = base + static_cast<std::ptrdiff_t>(j);
                        if (u >= 0 && u < static_cast<std::ptrdiff_t>(m)) {
                            acc += xrow[u] * krow[j];
                        }
                    }
                    orow[t2] += acc;
                }
            }
        }
    }
    const bool ng = any_grad(*this, {x, kernels, bias});
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, kernels, bias, id, n, ch, m, cout, f, mo, stride,
                                  padding](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& xv2 = t.value(x);
            const Array& kv2 = t.value(kernels);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t o = 0; o < cout; ++o) {
                    const double* grow = &g.data[(i * cout + o) * mo];
                    if (t.needs_grad(bias)) {
                        double acc = 0.0;
                        for (std::size_t t2 = 0; t2 < mo; ++t2) acc += grow[t2];
                        t.grad_mut(bias).data[o] += acc;
                    }
                    for (std::size_t c = 0; c < ch; ++c) {
                        const double* xrow = &xv2.data[(i * ch + c) * m];
                        const double* krow = &kv2.data[(o * ch + c) * f];
                        double* gxrow = t.needs_grad(x) ? &t.grad_mut(x).data[(i * ch + c) * m] : nullptr;
                        double* gkrow = t.needs_grad(kernels)
                                            ? &t.grad_mut(kernels).data[(o * ch + c) * f]
                                            : nullptr;
                        for (std::size_t t2 = 0; t2 < mo; ++t2) {
                            const double gv = grow[t2];
                            if (gv == 0.0) continue;
                            const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t2 * stride) -
                                                        static_cast<std::ptrdiff_t>(padding);
                            for (std::size_t j = 0; j < f; ++j) {
                                const std::ptrdiff_t u = base + static_cast<std::ptrdiff_t>(j);
                                if (u < 0 || u >= static_cast<std::ptrdiff_t>(m)) continue;
                                if (gxrow) gxrow[u] += gv * krow[j];
                                if (gkrow) gkrow[j] += gv * xrow[u];
                            }
                        }
                    }
                }
            }
        };
    }
    return id;
}

// ---- activations -------------------------------------------------------

NodeId Tape::relu(NodeId x) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& xv2 = t.value(x);
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (xv2.data[i] > 0.0) gx.data[i] += g.data[i];
            }
        };
    }
    return id;
}

NodeId Tape::leaky_relu(NodeId x, double slope) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = v > 0.0 ? v : slope * v;
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, slope](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& xv2 = t.value(x);
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx.data[i] += g.data[i] * (xv2.data[i] > 0.0 ? 1.0 : slope);
            }
        };
    }
    return id;
}

namespace {
// Stable logistic; output pinned inside the open interval (0, 1).
double sigmoid_scalar(double v) {
    double s;
    if (v >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-v));
    } else {
        const double e = std::exp(v);
        s = e / (1.0 + e);
    }
    if (s >= 1.0) s = 1.0 - 1e-16;
    if (s <= 0.0) s = 1e-300;
    return s;
}
}  // namespace

NodeId Tape::sigmoid(NodeId x) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = sigmoid_scalar(v);
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& s = t.node(id).value;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx.data[i] += g.data[i] * s.data[i] * (1.0 - s.data[i]);
            }
        };
    }
    return id;
}

NodeId Tape::tanh_act(NodeId x) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = std::tanh(v);
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& s = t.node(id).value;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx.data[i] += g.data[i] * (1.0 - s.data[i] * s.data[i]);
            }
        };
    }
    return id;
}

NodeId Tape::softmax_rows(NodeId x) {
    const Array& xv = value(x);
    if (xv.rank() != 2) throw std::invalid_argument("softmax_rows: requires a 2-D array");
    const std::size_t n = xv.shape[0], c = xv.shape[1];
    Array out(xv.shape, std::vector<double>(n * c));
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &xv.data[i * c];
        double* orow = &out.data[i * c];
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            z += orow[j];
        }
        for (std::size_t j = 0; j < c; ++j) orow[j] /= z;
    }
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, n, c](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& s = t.node(id).value;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < n; ++i) {
                const double* grow = &g.data[i * c];
                const double* srow = &s.data[i * c];
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += grow[j] * srow[j];
                double* gxrow = &gx.data[i * c];
                for (std::size_t j = 0; j < c; ++j) gxrow[j] += srow[j] * (grow[j] - dot);
            }
        };
    }
    return id;
}

// ---- elementwise -------------------------------------------------------

NodeId Tape::add(NodeId a, NodeId b) {
    const Array& av = value(a);
    const Array& bv = value(b);
    require_same_shape(av, bv, "add");
    Array out(av.shape, av.data);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
    const bool ng = any_grad(*this, {a, b});
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [a, b, id](Tape& t) {
            const Array& g = t.node(id).grad;
            if (t.needs_grad(a)) {
                Array& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
            }
            if (t.needs_grad(b)) {
                Array& gb = t.grad_mut(b);
                for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
            }
        };
    }
    return id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Array& av = value(a);
    const Array& bv = value(b);
    require_same_shape(av, bv, "sub");
    Array out(av.shape, av.data);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
    const bool ng = any_grad(*this, {a, b});
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [a, b, id](Tape& t) {
            const Array& g = t.node(id).grad;
            if (t.needs_grad(a)) {
                Array& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
            }
            if (t.needs_grad(b)) {
                Array& gb = t.grad_mut(b);
                for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
            }
        };
    }
    return id;
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Array& av = value(a);
    const Array& bv = value(b);
    require_same_shape(av, bv, "mul");
    Array out(av.shape, av.data);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
    const bool ng = any_grad(*this, {a, b});
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [a, b, id](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& av2 = t.value(a);
            const Array& bv2 = t.value(b);
            if (t.needs_grad(a)) {
                Array& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * bv2.data[i];
            }
            if (t.needs_grad(b)) {
                Array& gb = t.grad_mut(b);
                for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * av2.data[i];
            }
        };
    }
    return id;
}

NodeId Tape::axpb(NodeId x, double a, double b) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = a * v + b;
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, a](Tape& t) {
            const Array& g = t.node(id).grad;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += a * g.data[i];
        };
    }
    return id;
}

NodeId Tape::log(NodeId x) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = std::log(v);
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& xv2 = t.value(x);
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] / xv2.data[i];
        };
    }
    return id;
}

NodeId Tape::clamp(NodeId x, double lo, double hi) {
    const Array& xv = value(x);
    Array out(xv.shape, xv.data);
    for (auto& v : out.data) v = std::min(std::max(v, lo), hi);
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, lo, hi](Tape& t) {
            const Array& g = t.node(id).grad;
            const Array& xv2 = t.value(x);
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (xv2.data[i] >= lo && xv2.data[i] <= hi) gx.data[i] += g.data[i];
            }
        };
    }
    return id;
}

// ---- reductions --------------------------------------------------------

NodeId Tape::sum(NodeId x) {
    const Array& xv = value(x);
    double acc = 0.0;
    for (double v : xv.data) acc += v;
    const bool ng = needs_grad(x);
    NodeId id = push(Array::scalar(acc), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id](Tape& t) {
            const double g = t.node(id).grad.data[0];
            Array& gx = t.grad_mut(x);
            for (auto& v : gx.data) v += g;
        };
    }
    return id;
}

NodeId Tape::mean(NodeId x) {
    const Array& xv = value(x);
    const double inv = 1.0 / static_cast<double>(xv.size());
    double acc = 0.0;
    for (double v : xv.data) acc += v;
    const bool ng = needs_grad(x);
    NodeId id = push(Array::scalar(acc * inv), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, inv](Tape& t) {
            const double g = t.node(id).grad.data[0] * inv;
            Array& gx = t.grad_mut(x);
            for (auto& v : gx.data) v += g;
        };
    }
    return id;
}

// ---- structure ---------------------------------------------------------

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Array& av = value(a);
    const Array& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.shape[0] != bv.shape[0]) {
        throw std::invalid_argument("concat_cols: need 2-D arrays with equal row counts");
    }
    const std::size_t n = av.shape[0], ca = av.shape[1], cb = bv.shape[1];
    Array out({n, ca + cb}, std::vector<double>(n * (ca + cb)));
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(&av.data[i * ca], ca, &out.data[i * (ca + cb)]);
        std::copy_n(&bv.data[i * cb], cb, &out.data[i * (ca + cb) + ca]);
    }
    const bool ng = any_grad(*this, {a, b});
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [a, b, id, n, ca, cb](Tape& t) {
            const Array& g = t.node(id).grad;
            for (std::size_t i = 0; i < n; ++i) {
                if (t.needs_grad(a)) {
                    Array& ga = t.grad_mut(a);
                    for (std::size_t j = 0; j < ca; ++j) {
                        ga.data[i * ca + j] += g.data[i * (ca + cb) + j];
                    }
                }
                if (t.needs_grad(b)) {
                    Array& gb = t.grad_mut(b);
                    for (std::size_t j = 0; j < cb; ++j) {
                        gb.data[i * cb + j] += g.data[i * (ca + cb) + ca + j];
                    }
                }
            }
        };
    }
    return id;
}

NodeId Tape::slice_cols(NodeId x, std::size_t lo, std::size_t hi) {
    const Array& xv = value(x);
    if (xv.rank() != 2) throw std::invalid_argument("slice_cols: requires a 2-D array");
    if (lo >= hi || hi > xv.shape[1]) throw std::invalid_argument("slice_cols: bad column range");
    const std::size_t n = xv.shape[0], c = xv.shape[1], w = hi - lo;
    Array out({n, w}, std::vector<double>(n * w));
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(&xv.data[i * c + lo], w, &out.data[i * w]);
    }
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, n, c, lo, w](Tape& t) {
            const Array& g = t.node(id).grad;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < w; ++j) {
                    gx.data[i * c + lo + j] += g.data[i * w + j];
                }
            }
        };
    }
    return id;
}

NodeId Tape::reshape(NodeId x, std::vector<std::size_t> shape) {
    const Array& xv = value(x);
    if (Array::count(shape) != xv.size()) {
        throw std::invalid_argument("reshape: element count mismatch");
    }
    Array out(std::move(shape), xv.data);
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id](Tape& t) {
            const Array& g = t.node(id).grad;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i];
        };
    }
    return id;
}

NodeId Tape::pick_per_row(NodeId probs, const std::vector<int>& labels) {
    const Array& pv = value(probs);
    if (pv.rank() != 2) throw std::invalid_argument("pick_per_row: requires a 2-D array");
    const std::size_t n = pv.shape[0], c = pv.shape[1];
    if (labels.size() != n) throw std::invalid_argument("pick_per_row: label count != rows");
    Array out({n}, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw std::invalid_argument("pick_per_row: label out of range");
        }
        out.data[i] = pv.data[i * c + static_cast<std::size_t>(y)];
    }
    const bool ng = needs_grad(probs);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [probs, id, labels, c](Tape& t) {
            const Array& g = t.node(id).grad;
            Array& gp = t.grad_mut(probs);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gp.data[i * c + static_cast<std::size_t>(labels[i])] += g.data[i];
            }
        };
    }
    return id;
}

NodeId Tape::global_avg_time(NodeId x) {
    const Array& xv = value(x);
    if (xv.rank() != 3) throw std::invalid_argument("global_avg_time: requires a 3-D array");
    const std::size_t n = xv.shape[0], c = xv.shape[1], m = xv.shape[2];
    const double inv = 1.0 / static_cast<double>(m);
    Array out({n, c}, std::vector<double>(n * c));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double* row = &xv.data[(i * c + j) * m];
            double acc = 0.0;
            for (std::size_t t2 = 0; t2 < m; ++t2) acc += row[t2];
            out.data[i * c + j] = acc * inv;
        }
    }
    const bool ng = needs_grad(x);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        nodes_.back().backprop = [x, id, n, c, m, inv](Tape& t) {
            const Array& g = t.node(id).grad;
            Array& gx = t.grad_mut(x);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    const double gv = g.data[i * c + j] * inv;
                    double* row = &gx.data[(i * c + j) * m];
                    for (std::size_t t2 = 0; t2 < m; ++t2) row[t2] += gv;
                }
            }
        };
    }
    return id;
}

NodeId Tape::masked_merge(const Array& base, NodeId replacement, const Array& mask) {
    const Array& rv = value(replacement);
    require_same_shape(base, rv, "masked_merge");
    require_same_shape(base, mask, "masked_merge");
    Array out(base.shape, base.data);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask.data[i] == 1.0) out.data[i] = rv.data[i];
    }
    const bool ng = needs_grad(replacement);
    NodeId id = push(std::move(out), ng, {});
    if (ng) {
        Array mask_copy = mask;
        nodes_.back().backprop = [replacement, id, mask_copy](Tape& t) {
            const Array& g = t.node(id).grad;
            Array& gr = t.grad_mut(replacement);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (mask_copy.data[i] == 1.0) gr.data[i] += g.data[i];
            }
        };
    }
    return id;
}

}  // namespace ibgan::nd
