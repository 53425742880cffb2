#include "ibgan/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ibgan::oracle {

void DiscreteJoint::validate() const {
    if (classes <= 0 || points == 0) {
        throw std::invalid_argument("DiscreteJoint: needs at least one class and one point");
    }
    if (w.size() != static_cast<std::size_t>(classes) ||
        p.size() != static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("DiscreteJoint: w/p size mismatch with class count");
    }
    double wsum = 0.0;
    for (double v : w) {
        if (!(v > 0.0)) throw std::invalid_argument("DiscreteJoint: priors must be positive");
        wsum += v;
    }
    if (std::abs(wsum - 1.0) > 1e-12) {
        throw std::invalid_argument("DiscreteJoint: priors sum to " + std::to_string(wsum));
    }
    for (const auto& row : p) {
        if (row.size() != points) throw std::invalid_argument("DiscreteJoint: ragged p table");
        double rsum = 0.0;
        for (double v : row) {
            if (v < 0.0) throw std::invalid_argument("DiscreteJoint: negative conditional");
            rsum += v;
        }
        if (std::abs(rsum - 1.0) > 1e-12) {
            throw std::invalid_argument("DiscreteJoint: conditional row sums to " +
                                        std::to_string(rsum));
        }
    }
}

namespace {

ClassifierTable normalize_columns(std::vector<std::vector<double>> numer, std::size_t points) {
    ClassifierTable out;
    out.defined.assign(points, true);
    const std::size_t classes = numer.size();
    for (std::size_t x = 0; x < points; ++x) {
        double z = 0.0;
        for (std::size_t y = 0; y < classes; ++y) z += numer[y][x];
        if (z <= 0.0) {
            out.defined[x] = false;
            for (std::size_t y = 0; y < classes; ++y) numer[y][x] = 0.0;
        } else {
            for (std::size_t y = 0; y < classes; ++y) numer[y][x] /= z;
        }
    }
    out.c = std::move(numer);
    return out;
}

}  // namespace

ClassifierTable bayes_classifier(const DiscreteJoint& j) {
    j.validate();
    std::vector<std::vector<double>> numer(j.p.size(), std::vector<double>(j.points));
    for (std::size_t y = 0; y < j.p.size(); ++y) {
        for (std::size_t x = 0; x < j.points; ++x) numer[y][x] = j.w[y] * j.p[y][x];
    }
    return normalize_columns(std::move(numer), j.points);
}

ClassifierTable balanced_classifier(const DiscreteJoint& j) {
    j.validate();
    std::vector<std::vector<double>> numer = j.p;
    return normalize_columns(std::move(numer), j.points);
}

AugmentationPrior augmentation_prior(const std::vector<double>& w, double alpha, int classes) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("augmentation_prior: alpha must lie in (0,1)");
    }
    if (w.size() != static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("augmentation_prior: prior size != class count");
    }
    AugmentationPrior out;
    double max_w = 0.0;
    int argmax = 0;
    for (std::size_t y = 0; y < w.size(); ++y) {
        if (w[y] > max_w) {
            max_w = w[y];
            argmax = static_cast<int>(y);
        }
    }
    const double inv_classes = 1.0 / static_cast<double>(classes);
    if (!(alpha < inv_classes / max_w)) {
        out.feasible = false;
        out.violating_class = argmax;
        return out;
    }
    out.feasible = true;
    out.w_prime.resize(w.size());
    for (std::size_t y = 0; y < w.size(); ++y) {
        out.w_prime[y] = (inv_classes - alpha * w[y]) / (1.0 - alpha);
    }
    return out;
}

ClassifierTable augmented_optimal_classifier(const DiscreteJoint& j, const DiscreteJoint& j_aug,
                                             double alpha) {
    j.validate();
    j_aug.validate();
    if (j.classes != j_aug.classes || j.points != j_aug.points) {
        throw std::invalid_argument(
            "augmented_optimal_classifier: joints must share classes and points");
    }
    std::vector<std::vector<double>> numer(j.p.size(), std::vector<double>(j.points));
    for (std::size_t y = 0; y < j.p.size(); ++y) {
        for (std::size_t x = 0; x < j.points; ++x) {
            numer[y][x] = alpha * j.w[y] * j.p[y][x] + (1.0 - alpha) * j_aug.w[y] * j_aug.p[y][x];
        }
    }
    return normalize_columns(std::move(numer), j.points);
}

ResidualTable optimal_discriminator_identity(const std::vector<std::vector<double>>& p,
                                             const std::vector<std::vector<double>>& p_prime) {
    if (p.size() != p_prime.size()) {
        throw std::invalid_argument("optimal_discriminator_identity: table row counts differ");
    }
    ResidualTable out;
    out.residual.resize(p.size());
    out.defined.resize(p.size());
    for (std::size_t y = 0; y < p.size(); ++y) {
        if (p[y].size() != p_prime[y].size()) {
            throw std::invalid_argument("optimal_discriminator_identity: ragged tables");
        }
        out.residual[y].assign(p[y].size(), 0.0);
        out.defined[y].assign(p[y].size(), false);
        for (std::size_t x = 0; x < p[y].size(); ++x) {
            const double py = p[y][x];
            const double pp = p_prime[y][x];
            if (py + pp <= 0.0) continue;            // identity not evaluated at mass 0
            if (pp == 0.0) continue;                 // d* = 1, odds ratio excluded
            const double dstar = py / (py + pp);
            const double res = pp * dstar / (1.0 - dstar) - py;
            out.residual[y][x] = res;
            out.defined[y][x] = true;
            out.max_abs = std::max(out.max_abs, std::abs(res));
        }
    }
    return out;
}

std::vector<std::pair<int, std::size_t>> simulate_draws(const DiscreteJoint& j, std::size_t n,
                                                        Rng& rng) {
    if (n == 0) throw std::invalid_argument("simulate_draws: n must be >= 1");
    std::vector<std::pair<int, std::size_t>> draws;
    draws.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double uy = rng.uniform();
        int y = j.classes - 1;
        double acc = 0.0;
        for (int c = 0; c < j.classes; ++c) {
            acc += j.w[static_cast<std::size_t>(c)];
            if (uy < acc) {
                y = c;
                break;
            }
        }
        const auto& row = j.p[static_cast<std::size_t>(y)];
        const double ux = rng.uniform();
        std::size_t x = j.points - 1;
        double accx = 0.0;
        for (std::size_t c = 0; c < j.points; ++c) {
            accx += row[c];
            if (ux < accx) {
                x = c;
                break;
            }
        }
        draws.emplace_back(y, x);
    }
    return draws;
}

double empirical_loglik(const DiscreteJoint& j, const ClassifierTable& table, LLCriterion crit,
                        const std::vector<std::pair<int, std::size_t>>& draws) {
    double acc = 0.0;
    for (const auto& [y, x] : draws) {
        if (!table.defined[x]) continue;
        const double c = std::max(table.c[static_cast<std::size_t>(y)][x], 1e-300);
        const double weight =
            crit == LLCriterion::prior_weighted ? 1.0 : 1.0 / j.w[static_cast<std::size_t>(y)];
        acc += weight * std::log(c);
    }
    return acc / static_cast<double>(draws.size());
}

namespace {

ClassifierTable perturb_table(const ClassifierTable& table, double magnitude, Rng& rng) {
    ClassifierTable out = table;
    const std::size_t classes = table.c.size();
    for (std::size_t x = 0; x < table.defined.size(); ++x) {
        if (!table.defined[x]) continue;
        double z = 0.0;
        for (std::size_t y = 0; y < classes; ++y) {
            const double bump = std::exp(magnitude * rng.normal());
            out.c[y][x] = std::max(table.c[y][x], 1e-12) * bump;
            z += out.c[y][x];
        }
        for (std::size_t y = 0; y < classes; ++y) out.c[y][x] /= z;
    }
    return out;
}

}  // namespace

double empirical_bayes_check(const DiscreteJoint& j, const ClassifierTable& table,
                             LLCriterion crit, std::size_t n_draws, std::size_t n_tables,
                             Rng& rng) {
    const auto draws = simulate_draws(j, n_draws, rng);
    const double base = empirical_loglik(j, table, crit, draws);
    std::size_t beaten = 0;
    for (std::size_t i = 0; i < n_tables; ++i) {
        const ClassifierTable rival = perturb_table(table, 0.25, rng);
        if (empirical_loglik(j, rival, crit, draws) <= base) ++beaten;
    }
    return static_cast<double>(beaten) / static_cast<double>(n_tables);
}

DiscreteJoint random_joint(int classes, std::size_t points, Rng& rng) {
    DiscreteJoint j;
    j.classes = classes;
    j.points = points;
    j.w.resize(static_cast<std::size_t>(classes));
    double z = 0.0;
    for (auto& v : j.w) {
        v = 0.05 + rng.uniform();
        z += v;
    }
    for (auto& v : j.w) v /= z;
    // renormalize priors exactly so that validate()'s 1e-12 check holds
    double s = 0.0;
    for (std::size_t y = 0; y + 1 < j.w.size(); ++y) s += j.w[y];
    j.w.back() = 1.0 - s;
    j.p.assign(static_cast<std::size_t>(classes), std::vector<double>(points));
    for (auto& row : j.p) {
        double rz = 0.0;
        for (auto& v : row) {
            v = 0.01 + rng.uniform();
            rz += v;
        }
        for (auto& v : row) v /= rz;
        double rs = 0.0;
        for (std::size_t x = 0; x + 1 < row.size(); ++x) rs += row[x];
        row.back() = 1.0 - rs;
    }
    return j;
}

}  // namespace ibgan::oracle
