#include "ibgan/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ibgan::baselines {

std::vector<double> inverse_prior_weights(const ClassPriors& priors) {
    std::vector<double> v(priors.w.size());
    const double inv_classes = 1.0 / static_cast<double>(priors.w.size());
    for (std::size_t y = 0; y < v.size(); ++y) {
        if (!(priors.w[y] > 0.0)) {
            throw std::invalid_argument("inverse_prior_weights: priors must be positive");
        }
        v[y] = inv_classes / priors.w[y];
    }
    return v;
}

double class_weighted_loss(const Array& probs, const std::vector<int>& labels,
                           const ClassPriors& priors) {
    if (probs.rank() != 2 || probs.shape[0] != labels.size()) {
        throw std::invalid_argument("class_weighted_loss: probs/labels mismatch");
    }
    const std::vector<double> v = inverse_prior_weights(priors);
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double c = std::max(probs.at(i, static_cast<std::size_t>(labels[i])), 1e-12);
        acc += v[static_cast<std::size_t>(labels[i])] * std::log(c);
    }
    return -acc / static_cast<double>(labels.size());
}

Dataset upsample(const Dataset& ds, Rng& rng) {
    const auto members = ds.class_members();
    std::size_t max_count = 0;
    for (const auto& idx : members) max_count = std::max(max_count, idx.size());
    Dataset out = ds;
    for (const auto& idx : members) {
        if (idx.empty()) throw std::invalid_argument("upsample: empty class");
        for (std::size_t i = idx.size(); i < max_count; ++i) {
            out.samples.push_back(ds.samples[idx[rng.uniform_index(idx.size())]]);
        }
    }
    return out;
}

Dataset downsample(const Dataset& ds, Rng& rng) {
    const auto members = ds.class_members();
    std::size_t min_count = ds.size();
    for (const auto& idx : members) {
        if (idx.empty()) throw std::invalid_argument("downsample: empty class");
        min_count = std::min(min_count, idx.size());
    }
    std::vector<bool> keep(ds.size(), false);
    for (const auto& idx : members) {
        std::vector<std::size_t> pool = idx;
        for (std::size_t i = 0; i < min_count; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            keep[pool[i]] = true;
        }
    }
    Dataset out;
    out.class_count = ds.class_count;
    out.label_names = ds.label_names;
    out.stats = ds.stats;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (keep[i]) out.samples.push_back(ds.samples[i]);
    }
    return out;
}

namespace {

double sq_distance(const Array& a, const Array& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

SmoteResult smote(const Dataset& ds, int k_neighbors, const std::vector<std::size_t>& target_counts,
                  Rng& rng) {
    if (k_neighbors < 1) throw std::invalid_argument("smote: k_neighbors must be >= 1");
    const auto members = ds.class_members();
    std::vector<std::size_t> targets = target_counts;
    if (targets.empty()) {
        std::size_t max_count = 0;
        for (const auto& idx : members) max_count = std::max(max_count, idx.size());
        targets.assign(members.size(), max_count);
    }
    if (targets.size() != members.size()) {
        throw std::invalid_argument("smote: target_counts size != class count");
    }
    SmoteResult result;
    result.ds = ds;
    for (std::size_t y = 0; y < members.size(); ++y) {
        const auto& idx = members[y];
        if (idx.empty()) throw std::invalid_argument("smote: empty class");
        if (idx.size() >= targets[y]) continue;
        const std::size_t need = targets[y] - idx.size();

        if (idx.size() == 1) {
            result.warnings.push_back("class " + std::to_string(y) +
                                      " has a single sample; duplicating instead of interpolating");
            for (std::size_t s = 0; s < need; ++s) {
                result.ds.samples.push_back(ds.samples[idx[0]]);
            }
            continue;
        }

        // flattened vectors and k-NN tables, exact pairwise distances
        std::vector<Array> flats;
        flats.reserve(idx.size());
        for (std::size_t i : idx) flats.push_back(data::flatten_sample(ds.samples[i]));
        const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors),
                                                        idx.size() - 1);
        std::vector<std::vector<std::size_t>> knn(idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a) {
            std::vector<std::pair<double, std::size_t>> dist;
            dist.reserve(idx.size() - 1);
            for (std::size_t b = 0; b < idx.size(); ++b) {
                if (a == b) continue;
                dist.emplace_back(sq_distance(flats[a], flats[b]), b);
            }
            std::stable_sort(dist.begin(), dist.end());
            for (std::size_t j = 0; j < k_eff; ++j) knn[a].push_back(dist[j].second);
        }

        for (std::size_t s = 0; s < need; ++s) {
            const std::size_t a = rng.uniform_index(idx.size());
            const std::size_t b = knn[a][rng.uniform_index(k_eff)];
            const double u = rng.uniform();
            data::Sample synth = ds.samples[idx[a]];
            const data::Sample& nb = ds.samples[idx[b]];
            for (std::size_t i = 0; i < synth.series.size(); ++i) {
                synth.series.data[i] += u * (nb.series.data[i] - synth.series.data[i]);
            }
            for (std::size_t i = 0; i < synth.metadata.size(); ++i) {
                synth.metadata.data[i] += u * (nb.metadata.data[i] - synth.metadata.data[i]);
            }
            result.ds.samples.push_back(std::move(synth));
        }
    }
    return result;
}

}  // namespace ibgan::baselines
