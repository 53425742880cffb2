#include "ibgan/nets.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ibgan::nets {

namespace {

Array init_matrix(std::size_t rows, std::size_t cols, const NetSpec& spec, Rng& rng) {
    Array w = Array::zeros({rows, cols});
    if (spec.init_scale > 0.0) {
        for (auto& v : w.data) v = spec.init_scale * rng.normal();
    } else {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (auto& v : w.data) v = bound * (2.0 * rng.uniform() - 1.0);
    }
    return w;
}

Array init_conv(std::size_t c_out, std::size_t c_in, std::size_t f, const NetSpec& spec,
                Rng& rng) {
    Array w = Array::zeros({c_out, c_in, f});
    if (spec.init_scale > 0.0) {
        for (auto& v : w.data) v = spec.init_scale * rng.normal();
    } else {
        const double fan_in = static_cast<double>(c_in * f);
        const double fan_out = static_cast<double>(c_out * f);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w.data) v = bound * (2.0 * rng.uniform() - 1.0);
    }
    return w;
}

void require_positive(std::size_t v, const char* what) {
    if (v == 0) throw std::invalid_argument(std::string("nets: ") + what + " must be positive");
}

}  // namespace

std::vector<Array*> ClassifierNet::params() {
    return {&conv1_k, &conv1_b, &conv2_k, &conv2_b, &w1, &b1, &w2, &b2};
}
std::vector<const Array*> ClassifierNet::params() const {
    return {&conv1_k, &conv1_b, &conv2_k, &conv2_b, &w1, &b1, &w2, &b2};
}
std::vector<Array*> GeneratorNet::params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
std::vector<const Array*> GeneratorNet::params() const {
    return {&w1, &b1, &w2, &b2, &w3, &b3};
}
std::vector<Array*> DiscriminatorNet::params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
std::vector<const Array*> DiscriminatorNet::params() const {
    return {&w1, &b1, &w2, &b2, &w3, &b3};
}

ClassifierNet build_classifier(const NetSpec& spec, std::size_t k, std::size_t m,
                               std::size_t d_meta, int classes, Rng& rng) {
    require_positive(k, "channel count");
    require_positive(m, "series length");
    require_positive(spec.conv_channels, "conv width");
    require_positive(spec.dense_width, "dense width");
    if (classes < 1) throw std::invalid_argument("build_classifier: needs at least one class");
    const std::size_t f1 = std::min(k, m);
    const std::size_t m1 = m - f1 + 1;
    if (spec.conv2_filter > m1) {
        throw std::invalid_argument(
            "build_classifier: second conv filter " + std::to_string(spec.conv2_filter) +
            " exceeds intermediate length " + std::to_string(m1) + "; composition invalid");
    }
    ClassifierNet net;
    net.spec = spec;
    net.k = k;
    net.m = m;
    net.d_meta = d_meta;
    net.classes = classes;
    net.conv1_k = init_conv(spec.conv_channels, k, f1, spec, rng);
    net.conv1_b = Array::zeros({spec.conv_channels});
    net.conv2_k = init_conv(spec.conv_channels, spec.conv_channels, spec.conv2_filter, spec, rng);
    net.conv2_b = Array::zeros({spec.conv_channels});
    net.w1 = init_matrix(spec.conv_channels + d_meta, spec.dense_width, spec, rng);
    net.b1 = Array::zeros({spec.dense_width});
    net.w2 = init_matrix(spec.dense_width, static_cast<std::size_t>(classes), spec, rng);
    net.b2 = Array::zeros({static_cast<std::size_t>(classes)});
    return net;
}

GeneratorNet build_generator(const NetSpec& spec, std::size_t flat_dim, int classes, Rng& rng) {
    require_positive(flat_dim, "flat dimension");
    require_positive(spec.hidden_width, "hidden width");
    if (classes < 1) throw std::invalid_argument("build_generator: needs at least one class");
    GeneratorNet net;
    net.spec = spec;
    net.flat_dim = flat_dim;
    net.classes = classes;
    const std::size_t in = 2 * flat_dim + static_cast<std::size_t>(classes);
    net.w1 = init_matrix(in, spec.hidden_width, spec, rng);
    net.b1 = Array::zeros({spec.hidden_width});
    net.w2 = init_matrix(spec.hidden_width, spec.hidden_width, spec, rng);
    net.b2 = Array::zeros({spec.hidden_width});
    net.w3 = init_matrix(spec.hidden_width, flat_dim, spec, rng);
    net.b3 = Array::zeros({flat_dim});
    return net;
}

DiscriminatorNet build_discriminator(const NetSpec& spec, std::size_t flat_dim, int classes,
                                     Rng& rng) {
    require_positive(flat_dim, "flat dimension");
    require_positive(spec.hidden_width, "hidden width");
    if (classes < 1) throw std::invalid_argument("build_discriminator: needs at least one class");
    DiscriminatorNet net;
    net.spec = spec;
    net.flat_dim = flat_dim;
    net.classes = classes;
    const std::size_t in = flat_dim + static_cast<std::size_t>(classes);
    net.w1 = init_matrix(in, spec.hidden_width, spec, rng);
    net.b1 = Array::zeros({spec.hidden_width});
    net.w2 = init_matrix(spec.hidden_width, spec.hidden_width, spec, rng);
    net.b2 = Array::zeros({spec.hidden_width});
    net.w3 = init_matrix(spec.hidden_width, flat_dim, spec, rng);
    net.b3 = Array::zeros({flat_dim});
    return net;
}

Array one_hot(const std::vector<int>& labels, int classes) {
    Array out = Array::zeros({labels.size(), static_cast<std::size_t>(classes)});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) {
            throw std::invalid_argument("one_hot: label out of range");
        }
        out.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return out;
}

NodeId classifier_forward(Tape& t, const ClassifierNet& net, const std::vector<NodeId>& pids,
                          NodeId series, NodeId meta) {
    const double slope = net.spec.leaky_slope;
    NodeId h = t.leaky_relu(t.conv1d(series, pids[0], pids[1], 1, 0), slope);
    h = t.leaky_relu(t.conv1d(h, pids[2], pids[3], 1, 0), slope);
    NodeId pooled = t.global_avg_time(h);
    if (net.d_meta > 0) pooled = t.concat_cols(pooled, meta);
    NodeId d1 = t.leaky_relu(t.affine(pooled, pids[4], pids[5]), slope);
    return t.softmax_rows(t.affine(d1, pids[6], pids[7]));
}

NodeId classifier_forward_flat(Tape& t, const ClassifierNet& net, const std::vector<NodeId>& pids,
                               NodeId flat) {
    const std::size_t n = t.value(flat).shape[0];
    const std::size_t series_dim = net.k * net.m;
    NodeId series = t.reshape(t.slice_cols(flat, 0, series_dim), {n, net.k, net.m});
    NodeId meta = -1;
    if (net.d_meta > 0) meta = t.slice_cols(flat, series_dim, series_dim + net.d_meta);
    return classifier_forward(t, net, pids, series, meta);
}

NodeId generator_forward(Tape& t, const GeneratorNet& net, const std::vector<NodeId>& pids,
                         NodeId x_mask, NodeId mask, NodeId labels_one_hot) {
    const double slope = net.spec.leaky_slope;
    NodeId in = t.concat_cols(t.concat_cols(x_mask, mask), labels_one_hot);
    NodeId h = t.leaky_relu(t.affine(in, pids[0], pids[1]), slope);
    h = t.leaky_relu(t.affine(h, pids[2], pids[3]), slope);
    NodeId raw = t.affine(h, pids[4], pids[5]);
    return t.axpb(t.tanh_act(raw), net.spec.tanh_scale, 0.0);
}

NodeId discriminator_forward(Tape& t, const DiscriminatorNet& net, const std::vector<NodeId>& pids,
                             NodeId x, NodeId labels_one_hot) {
    const double slope = net.spec.leaky_slope;
    NodeId in = t.concat_cols(x, labels_one_hot);
    NodeId h = t.leaky_relu(t.affine(in, pids[0], pids[1]), slope);
    h = t.leaky_relu(t.affine(h, pids[2], pids[3]), slope);
    return t.sigmoid(t.affine(h, pids[4], pids[5]));
}

Array classifier_probs(const ClassifierNet& net, const data::Dataset& ds,
                       const std::vector<std::size_t>& indices) {
    const std::size_t n = indices.size();
    Array series = Array::zeros({n, net.k, net.m});
    Array meta = net.d_meta > 0 ? Array::zeros({n, net.d_meta}) : Array();
    for (std::size_t i = 0; i < n; ++i) {
        const data::Sample& s = ds.samples[indices[i]];
        std::copy(s.series.data.begin(), s.series.data.end(),
                  series.data.begin() + static_cast<std::ptrdiff_t>(i * net.k * net.m));
        for (std::size_t j = 0; j < net.d_meta; ++j) meta.at(i, j) = s.metadata.data[j];
    }
    Tape t;
    const std::vector<NodeId> pids = lift_params(t, net, false);
    NodeId meta_node = net.d_meta > 0 ? t.constant(meta) : -1;
    NodeId probs = classifier_forward(t, net, pids, t.constant(series), meta_node);
    return t.value(probs);
}

}  // namespace ibgan::nets
