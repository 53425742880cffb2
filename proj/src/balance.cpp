#include "ibgan/balance.hpp"

#include <stdexcept>
#include <string>

namespace ibgan::balance {

std::vector<double> mask_pool_probs(const ClassPriors& priors, MaskPoolRule rule) {
    const std::size_t n = priors.w.size();
    std::vector<double> q(n);
    if (rule == MaskPoolRule::inverse_prior) {
        double z = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            q[y] = 1.0 / priors.w[y];
            z += q[y];
        }
        for (auto& v : q) v /= z;
    } else {
        const double uniform2 = 2.0 / static_cast<double>(n);
        for (std::size_t y = 0; y < n; ++y) {
            q[y] = uniform2 - priors.w[y];
            if (q[y] < 0.0) {
                throw std::invalid_argument(
                    "mask_pool_probs: exact_balance infeasible, class " + std::to_string(y) +
                    " has prior " + std::to_string(priors.w[y]) + " > 2/|Y|");
            }
        }
    }
    return q;
}

BatchPair weighted_resample(const Dataset& ds, const ClassPriors& priors, std::size_t n_mb,
                            Rng& rng, MaskPoolRule rule) {
    if (n_mb == 0) throw std::invalid_argument("weighted_resample: n_mb must be >= 1");
    const auto members = ds.class_members();
    const std::vector<double> q = mask_pool_probs(priors, rule);
    BatchPair bp;
    bp.real.reserve(n_mb);
    bp.mask_pool.reserve(n_mb);
    for (std::size_t i = 0; i < n_mb; ++i) {
        bp.real.push_back(rng.uniform_index(ds.size()));
    }
    for (std::size_t i = 0; i < n_mb; ++i) {
        const double u = rng.uniform();
        std::size_t y = q.size() - 1;
        double acc = 0.0;
        for (std::size_t c = 0; c < q.size(); ++c) {
            acc += q[c];
            if (u < acc) {
                y = c;
                break;
            }
        }
        const auto& pool = members[y];
        bp.mask_pool.push_back(pool[rng.uniform_index(pool.size())]);
    }
    return bp;
}

Mask draw_mask(std::vector<std::size_t> shape, double p_miss, Rng& rng) {
    if (!(p_miss >= 0.0 && p_miss <= 1.0)) {
        throw std::invalid_argument("draw_mask: p_miss must lie in [0,1]");
    }
    Mask m{Array::zeros(std::move(shape))};
    for (auto& v : m.indicator.data) v = rng.uniform() < p_miss ? 1.0 : 0.0;
    return m;
}

Array apply_mask(const Array& x, const Mask& mask, const Array& z) {
    nd::require_same_shape(x, mask.indicator, "apply_mask");
    nd::require_same_shape(x, z, "apply_mask");
    Array out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask.indicator.data[i] == 1.0) out.data[i] = z.data[i];
    }
    return out;
}

Array noise(std::vector<std::size_t> shape, Rng& rng) {
    return rng.normal_array(std::move(shape));
}

}  // namespace ibgan::balance
