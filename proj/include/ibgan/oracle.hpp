#pragma once

#include <utility>
#include <vector>

#include "ibgan/rng.hpp"

namespace ibgan::oracle {

using nd::Rng;

/// Finite joint distribution over (label, point): priors w_y and a
/// row-stochastic conditional table p[y][x].
struct DiscreteJoint {
    int classes = 0;
    std::size_t points = 0;
    std::vector<double> w;
    std::vector<std::vector<double>> p;

    void validate() const;  // throws on malformed priors/rows
};

/// Posterior-style table c[y][x]; columns over y sum to 1 where defined.
/// Columns with zero total mass are flagged undefined rather than forced
/// to a default.
struct ClassifierTable {
    std::vector<std::vector<double>> c;
    std::vector<bool> defined;  // per point
};

/// c*_y(x) = w_y p_y(x) / sum_y' w_y' p_y'(x)
ClassifierTable bayes_classifier(const DiscreteJoint& j);

/// cbar*_y(x) = p_y(x) / sum_y' p_y'(x)
ClassifierTable balanced_classifier(const DiscreteJoint& j);

struct AugmentationPrior {
    bool feasible = false;
    std::vector<double> w_prime;  // valid iff feasible
    int violating_class = -1;     // first class with w'_y <= 0 when infeasible
};

/// w'_y = (1/|Y| - alpha w_y) / (1 - alpha); feasible exactly when
/// alpha < (1/|Y|) / max_y w_y.
AugmentationPrior augmentation_prior(const std::vector<double>& w, double alpha, int classes);

/// ctilde*_y(x) = [alpha w_y p_y + (1-alpha) w'_y p'_y] / column sum.
ClassifierTable augmented_optimal_classifier(const DiscreteJoint& j, const DiscreteJoint& j_aug,
                                             double alpha);

/// Residual of p' * d*/(1-d*) - p with d* = p/(p+p'). Entries where p'=0
/// (d*=1, odds undefined) are flagged and excluded.
struct ResidualTable {
    std::vector<std::vector<double>> residual;
    std::vector<std::vector<bool>> defined;
    double max_abs = 0.0;  // over defined entries
};

ResidualTable optimal_discriminator_identity(const std::vector<std::vector<double>>& p,
                                             const std::vector<std::vector<double>>& p_prime);

enum class LLCriterion { prior_weighted, equal_weighted };

/// Simulated (y, x) pairs from the joint.
std::vector<std::pair<int, std::size_t>> simulate_draws(const DiscreteJoint& j, std::size_t n,
                                                        Rng& rng);

/// Empirical mean log-likelihood of a table under the chosen weighting:
///   prior_weighted: mean log c_y(x)
///   equal_weighted: mean (1/w_y) log c_y(x)
double empirical_loglik(const DiscreteJoint& j, const ClassifierTable& table, LLCriterion crit,
                        const std::vector<std::pair<int, std::size_t>>& draws);

/// Compares `table` against n_tables random perturbations of itself on
/// simulated draws; returns the fraction of perturbed tables it beats.
/// The optimal table under the matching criterion should return 1.0.
double empirical_bayes_check(const DiscreteJoint& j, const ClassifierTable& table,
                             LLCriterion crit, std::size_t n_draws, std::size_t n_tables,
                             Rng& rng);

/// Random joint for property sweeps: positive priors and conditionals.
DiscreteJoint random_joint(int classes, std::size_t points, Rng& rng);

}  // namespace ibgan::oracle
