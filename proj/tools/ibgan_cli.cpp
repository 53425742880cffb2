#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ibgan/baselines.hpp"
#include "ibgan/experiment.hpp"
#include "ibgan/oracle.hpp"
#include "ibgan/trainer.hpp"

namespace {

using namespace ibgan;

int check(bool ok, const std::string& name, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    return ok ? 0 : 1;
}

int run_oracle_check() {
    nd::Rng rng(20260810);
    int failures = 0;

    // recovery: p' = p with the printed prior formula reproduces the
    // balanced classifier exactly
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int classes = 2 + static_cast<int>(rng.uniform_index(3));
        const std::size_t points = 2 + rng.uniform_index(19);
        const oracle::DiscreteJoint j = oracle::random_joint(classes, points, rng);
        double max_w = 0.0;
        for (double w : j.w) max_w = std::max(max_w, w);
        const double bound = (1.0 / classes) / max_w;
        const double alpha = 0.5 * bound * (0.2 + 0.8 * rng.uniform());
        const auto aug = oracle::augmentation_prior(j.w, alpha, classes);
        if (!aug.feasible) {
            ++failures;
            continue;
        }
        oracle::DiscreteJoint j2 = j;
        j2.w = aug.w_prime;
        const auto tilde = oracle::augmented_optimal_classifier(j, j2, alpha);
        const auto bal = oracle::balanced_classifier(j);
        for (std::size_t y = 0; y < tilde.c.size(); ++y) {
            for (std::size_t x = 0; x < points; ++x) {
                worst = std::max(worst, std::abs(tilde.c[y][x] - bal.c[y][x]));
            }
        }
    }
    failures += check(worst < 1e-12, "recovery: max |c_tilde - c_bar| < 1e-12 over 200 joints",
                      "max " + std::to_string(worst));

    // feasibility boundary on a 50-point alpha grid
    bool boundary_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const int classes = 2 + static_cast<int>(rng.uniform_index(3));
        const oracle::DiscreteJoint j = oracle::random_joint(classes, 4, rng);
        double max_w = 0.0;
        for (double w : j.w) max_w = std::max(max_w, w);
        const double bound = (1.0 / classes) / max_w;
        for (int i = 0; i < 50; ++i) {
            const double alpha = (i + 0.5) / 50.0;
            const bool feasible = oracle::augmentation_prior(j.w, alpha, classes).feasible;
            if (feasible != (alpha < bound)) boundary_ok = false;
        }
    }
    failures += check(boundary_ok, "feasibility boundary matches alpha < (1/|Y|)/max_w exactly");

    // optimal-discriminator odds identity
    double max_resid = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const oracle::DiscreteJoint a = oracle::random_joint(4, 20, rng);
        const oracle::DiscreteJoint b = oracle::random_joint(4, 20, rng);
        max_resid = std::max(max_resid,
                             oracle::optimal_discriminator_identity(a.p, b.p).max_abs);
    }
    failures += check(max_resid < 1e-12, "discriminator odds identity residual < 1e-12",
                      "max " + std::to_string(max_resid));

    // empirical optimality of the Bayes and balanced tables
    const oracle::DiscreteJoint j = oracle::random_joint(3, 8, rng);
    const double frac_bayes = oracle::empirical_bayes_check(
        j, oracle::bayes_classifier(j), oracle::LLCriterion::prior_weighted, 20000, 100, rng);
    failures += check(frac_bayes == 1.0, "bayes table beats 100 perturbed rivals (prior loss)");
    const double frac_bal = oracle::empirical_bayes_check(
        j, oracle::balanced_classifier(j), oracle::LLCriterion::equal_weighted, 20000, 100, rng);
    failures += check(frac_bal == 1.0, "balanced table beats 100 perturbed rivals (weighted loss)");

    return failures == 0 ? 0 : 1;
}

int run_gradcheck() {
    nd::Rng rng(77);
    int failures = 0;

    // layer-wise checks
    nd::Array input = rng.normal_array({3, 5});
    nd::LossBuilder dense = [input](nd::Tape& t, const std::vector<nd::NodeId>& p) {
        return t.mean(t.leaky_relu(t.affine(t.constant(input), p[0], p[1]), 0.2));
    };
    double err = nd::grad_check(dense, {rng.normal_array({5, 4}), rng.normal_array({4})}, 1e-5);
    failures += check(err < 1e-5, "dense + leaky_relu", "max rel err " + std::to_string(err));

    nd::Array series = rng.normal_array({2, 3, 9});
    nd::LossBuilder conv = [series](nd::Tape& t, const std::vector<nd::NodeId>& p) {
        return t.mean(t.sigmoid(t.conv1d(t.constant(series), p[0], p[1], 1, 0)));
    };
    err = nd::grad_check(conv, {rng.normal_array({4, 3, 3}), rng.normal_array({4})}, 1e-5);
    failures += check(err < 1e-5, "conv1d + sigmoid", "max rel err " + std::to_string(err));

    // composed triplet on the tiny instance
    data::SyntheticSpec spec;
    spec.classes = 2;
    spec.channels = 2;
    spec.length = 8;
    spec.ar_coeff = {0.5, 0.5};
    spec.class_mean = {-0.5, 0.5};
    spec.sizes = {8, 8};
    nd::Rng data_rng(11);
    data::Dataset ds = data::standardize(data::generate_synthetic(spec, data_rng));

    train::TrainConfig cfg;
    cfg.n_mb = 4;
    cfg.nets.hidden_width = 8;
    cfg.nets.conv_channels = 4;
    cfg.nets.dense_width = 8;
    cfg.seed = 3;
    train::TripletState st = train::init_triplet(ds, cfg);
    const auto priors = data::compute_priors(ds);
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const train::StepBatch b = train::make_step_batch(ds, priors, cfg, st.rng);
        std::vector<double> w_d(cfg.n_mb, 1.0);
        std::vector<nd::Array> params;
        for (auto* p : st.gen.params()) params.push_back(*p);
        for (auto* p : st.disc.params()) params.push_back(*p);
        for (auto* p : st.clf.params()) params.push_back(*p);
        for (auto& p : params) {
            for (auto& v : p.data) v += 0.05 * st.rng.normal();
        }
        const auto build = train::triplet_loss_builder(st.gen, st.disc, st.clf, b, w_d, cfg.alpha);
        worst = std::max(worst, nd::grad_check(build, params, 1e-5));
    }
    failures += check(worst < 1e-4, "composed triplet losses, 20 random draws",
                      "max rel err " + std::to_string(worst));
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IB-GAN training engine and experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "run an experiment grid from a config file");
    run->add_option("--config", config_path, "path to the config file")->required();

    std::string in_path, csv_path;
    CLI::App* summ = app.add_subcommand("summarize", "aggregate a results record file");
    summ->add_option("--in", in_path, "record file written by 'run'")->required();
    summ->add_option("--csv", csv_path, "also write the summary CSV here");

    CLI::App* oc = app.add_subcommand("oracle-check", "run the discrete-theory property sweeps");
    CLI::App* gc = app.add_subcommand("gradcheck", "run gradient correctness checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const ibgan::exp::ExperimentConfig cfg = ibgan::exp::parse_config_file(config_path);
            ibgan::exp::run_experiment(cfg, &std::cout);
            std::cout << "records appended to " << cfg.output << "\n";
            return 0;
        }
        if (summ->parsed()) {
            const auto records = ibgan::exp::read_records(in_path);
            const auto rows = ibgan::exp::summarize(records);
            std::cout << ibgan::exp::summary_table(rows);
            const std::string csv = ibgan::exp::summary_csv(rows);
            if (!csv_path.empty()) {
                std::ofstream out(csv_path);
                out << csv;
                std::cout << "summary CSV written to " << csv_path << "\n";
            } else {
                std::cout << "\n" << csv;
            }
            return 0;
        }
        if (oc->parsed()) return run_oracle_check();
        if (gc->parsed()) return run_gradcheck();
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
