#include "ibgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ibgan::train {

namespace {
constexpr double kScoreClamp = 1e-7;
constexpr double kProbClamp = 1e-12;
}  // namespace

void TrainConfig::validate() const {
    if (!(p_miss >= 0.0 && p_miss <= 1.0)) {
        throw std::invalid_argument("TrainConfig: p_miss must lie in [0,1]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("TrainConfig: alpha must lie in (0,1)");
    }
    if (n_mb == 0) throw std::invalid_argument("TrainConfig: n_mb must be >= 1");
    if (w_d_cap <= 0.0) throw std::invalid_argument("TrainConfig: w_d_cap must be positive");
}

StepBatch make_step_batch(const Dataset& ds, const ClassPriors& priors, const TrainConfig& cfg,
                          Rng& rng) {
    const std::size_t n = cfg.n_mb;
    const std::size_t k = ds.channels(), m = ds.length(), d = ds.meta_dim();
    const std::size_t flat = ds.flat_dim();
    const balance::BatchPair bp = balance::weighted_resample(ds, priors, n, rng, cfg.mask_rule);
    const balance::Mask mask = balance::draw_mask({n, flat}, cfg.p_miss, rng);
    const Array z = balance::noise({n, flat}, rng);

    StepBatch b;
    b.real_series = Array::zeros({n, k, m});
    if (d > 0) b.real_meta = Array::zeros({n, d});
    b.real_flat = Array::zeros({n, flat});
    b.mask = mask.indicator;
    b.x_mask = Array::zeros({n, flat});
    for (std::size_t i = 0; i < n; ++i) {
        const data::Sample& sr = ds.samples[bp.real[i]];
        b.real_labels.push_back(sr.label);
        std::copy(sr.series.data.begin(), sr.series.data.end(),
                  b.real_series.data.begin() + static_cast<std::ptrdiff_t>(i * k * m));
        const Array fr = data::flatten_sample(sr);
        std::copy(fr.data.begin(), fr.data.end(),
                  b.real_flat.data.begin() + static_cast<std::ptrdiff_t>(i * flat));
        for (std::size_t j = 0; j < d; ++j) b.real_meta.at(i, j) = sr.metadata.data[j];

        const data::Sample& sf = ds.samples[bp.mask_pool[i]];
        b.fake_labels.push_back(sf.label);
        const Array ff = data::flatten_sample(sf);
        for (std::size_t j = 0; j < flat; ++j) {
            const bool masked = b.mask.at(i, j) == 1.0;
            b.x_mask.at(i, j) = masked ? z.at(i, j) : ff.data[j];
        }
    }
    b.one_hot_real = nets::one_hot(b.real_labels, ds.class_count);
    b.one_hot_fake = nets::one_hot(b.fake_labels, ds.class_count);
    return b;
}

NodeId loss_d_node(Tape& t, NodeId d_real, NodeId d_fake, const Array& mask) {
    nd::require_same_shape(t.value(d_fake), mask, "loss_d");
    const std::size_t total = t.value(d_real).size() + t.value(d_fake).size();
    NodeId log_real = t.log(t.clamp(d_real, kScoreClamp, 1.0 - kScoreClamp));
    NodeId df = t.clamp(d_fake, kScoreClamp, 1.0 - kScoreClamp);
    Array one_minus_mask = mask;
    for (auto& v : one_minus_mask.data) v = 1.0 - v;
    NodeId kept = t.mul(t.log(df), t.constant(one_minus_mask));
    NodeId flipped = t.mul(t.log(t.axpb(df, -1.0, 1.0)), t.constant(mask));
    NodeId acc = t.add(t.sum(log_real), t.add(t.sum(kept), t.sum(flipped)));
    return t.axpb(acc, -1.0 / static_cast<double>(total), 0.0);
}

NodeId loss_g_adv_node(Tape& t, NodeId d_fake, const Array& mask) {
    nd::require_same_shape(t.value(d_fake), mask, "loss_g_adv");
    double n_masked = 0.0;
    for (double v : mask.data) n_masked += v;
    if (n_masked == 0.0) return t.constant(Array::scalar(0.0));
    NodeId df = t.clamp(d_fake, kScoreClamp, 1.0 - kScoreClamp);
    NodeId masked_log = t.mul(t.log(df), t.constant(mask));
    return t.axpb(t.sum(masked_log), -1.0 / n_masked, 0.0);
}

NodeId weighted_nll_node(Tape& t, NodeId probs, const std::vector<int>& labels,
                         const std::vector<double>& weights) {
    if (labels.size() != weights.size()) {
        throw std::invalid_argument("weighted_nll: labels/weights size mismatch");
    }
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("weighted_nll: weights must be nonnegative");
    }
    NodeId picked = t.pick_per_row(t.clamp(probs, kProbClamp, 1.0), labels);
    NodeId weighted = t.mul(t.log(picked), t.constant(Array::vec(weights)));
    return t.axpb(t.sum(weighted), -1.0 / static_cast<double>(labels.size()), 0.0);
}

NodeId loss_c_node(Tape& t, NodeId c_real, const std::vector<int>& real_labels, NodeId c_fake,
                   const std::vector<int>& fake_labels, const std::vector<double>& w_d,
                   double alpha) {
    NodeId real = weighted_nll_node(t, c_real, real_labels,
                                    std::vector<double>(real_labels.size(), 1.0));
    NodeId fake = weighted_nll_node(t, c_fake, fake_labels, w_d);
    return t.add(t.axpb(real, alpha, 0.0), t.axpb(fake, 1.0 - alpha, 0.0));
}

std::pair<double, double> gan_loss(const Array& d_real, const Array& d_fake, const Array& mask) {
    Tape t;
    NodeId nr = t.constant(d_real);
    NodeId nf = t.constant(d_fake);
    const double ld = t.value(loss_d_node(t, nr, nf, mask)).data[0];
    const double lg = t.value(loss_g_adv_node(t, nf, mask)).data[0];
    return {ld, lg};
}

double discriminator_weights(double d_sample, double cap) {
    if (!(d_sample > 0.0 && d_sample < 1.0)) {
        throw std::invalid_argument("discriminator_weights: score must lie in (0,1)");
    }
    return std::min(d_sample / (1.0 - d_sample), cap);
}

double classifier_loss_alpha(const Array& c_real, const std::vector<int>& real_labels,
                             const Array& c_fake, const std::vector<int>& fake_labels,
                             const std::vector<double>& w_d, double alpha) {
    Tape t;
    NodeId nr = t.constant(c_real);
    NodeId nf = t.constant(c_fake);
    return t.value(loss_c_node(t, nr, real_labels, nf, fake_labels, w_d, alpha)).data[0];
}

std::vector<double> sample_scores(const Array& component_scores) {
    if (component_scores.rank() != 2) {
        throw std::invalid_argument("sample_scores: expected [n,flat]");
    }
    const std::size_t n = component_scores.shape[0], flat = component_scores.shape[1];
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < flat; ++j) out[i] += component_scores.at(i, j);
        out[i] /= static_cast<double>(flat);
    }
    return out;
}

TripletState init_triplet(const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    TripletState st;
    st.rng = Rng(cfg.seed);
    const std::size_t flat = ds.flat_dim();
    st.gen = nets::build_generator(cfg.nets, flat, ds.class_count, st.rng);
    st.disc = nets::build_discriminator(cfg.nets, flat, ds.class_count, st.rng);
    st.clf = nets::build_classifier(cfg.nets, ds.channels(), ds.length(), ds.meta_dim(),
                                    ds.class_count, st.rng);
    st.opt_g = nd::AdamState::for_params(st.gen.params(), cfg.lr, cfg.beta1, cfg.beta2,
                                         cfg.adam_eps);
    st.opt_d = nd::AdamState::for_params(st.disc.params(), cfg.lr, cfg.beta1, cfg.beta2,
                                         cfg.adam_eps);
    st.opt_c = nd::AdamState::for_params(st.clf.params(), cfg.lr, cfg.beta1, cfg.beta2,
                                         cfg.adam_eps);
    return st;
}

namespace {

std::vector<Array> collect_grads(Tape& t, const std::vector<NodeId>& ids) {
    std::vector<Array> grads;
    grads.reserve(ids.size());
    for (NodeId id : ids) grads.push_back(t.grad(id));
    return grads;
}

void check_finite(double loss, const char* what, std::size_t epoch, std::size_t step) {
    if (!std::isfinite(loss)) {
        throw std::runtime_error(std::string(what) + " became non-finite at epoch " +
                                 std::to_string(epoch) + ", step " + std::to_string(step));
    }
}

}  // namespace

void train_epoch(TripletState& state, const Dataset& ds, const ClassPriors& priors,
                 const TrainConfig& cfg) {
    cfg.validate();
    if (!ds.stats.has_value()) {
        throw std::invalid_argument("train_epoch: dataset must be standardized first");
    }
    const std::size_t steps = (ds.size() + cfg.n_mb - 1) / cfg.n_mb;
    EpochLosses ep;
    ep.epoch = state.epoch + 1;
    for (std::size_t step = 0; step < steps; ++step) {
        const StepBatch b = make_step_batch(ds, priors, cfg, state.rng);

        // (2) discriminator step
        {
            Tape t;
            const auto pg = nets::lift_params(t, state.gen, false);
            const auto pd = nets::lift_params(t, state.disc, true);
            NodeId xhat = nets::generator_forward(t, state.gen, pg, t.constant(b.x_mask),
                                                  t.constant(b.mask), t.constant(b.one_hot_fake));
            NodeId xprime = t.masked_merge(b.x_mask, xhat, b.mask);
            NodeId d_fake = nets::discriminator_forward(t, state.disc, pd, xprime,
                                                        t.constant(b.one_hot_fake));
            NodeId d_real = nets::discriminator_forward(t, state.disc, pd, t.constant(b.real_flat),
                                                        t.constant(b.one_hot_real));
            NodeId loss = loss_d_node(t, d_real, d_fake, b.mask);
            const double lv = t.value(loss).data[0];
            check_finite(lv, "loss_D", ep.epoch, step);
            ep.loss_d += lv;
            t.backward(loss);
            nd::adam_update(state.disc.params(), collect_grads(t, pd), state.opt_d);
        }

        // (3) classifier step; w_D comes from fresh post-update D scores and
        // is treated as a constant
        std::vector<double> w_d;
        {
            Tape t;
            const auto pg = nets::lift_params(t, state.gen, false);
            const auto pd = nets::lift_params(t, state.disc, false);
            const auto pc = nets::lift_params(t, state.clf, true);
            NodeId xhat = nets::generator_forward(t, state.gen, pg, t.constant(b.x_mask),
                                                  t.constant(b.mask), t.constant(b.one_hot_fake));
            NodeId xprime = t.masked_merge(b.x_mask, xhat, b.mask);
            NodeId d_fake = nets::discriminator_forward(t, state.disc, pd, xprime,
                                                        t.constant(b.one_hot_fake));
            for (double s : sample_scores(t.value(d_fake))) {
                if (!std::isfinite(s)) {
                    throw std::runtime_error(
                        "discriminator scores became non-finite at epoch " +
                        std::to_string(ep.epoch) + ", step " + std::to_string(step) +
                        " (training diverged)");
                }
                w_d.push_back(discriminator_weights(s, cfg.w_d_cap));
            }
            NodeId meta = state.clf.d_meta > 0 ? t.constant(b.real_meta) : -1;
            NodeId c_real = nets::classifier_forward(t, state.clf, pc, t.constant(b.real_series),
                                                     meta);
            NodeId c_fake = nets::classifier_forward_flat(t, state.clf, pc, xprime);
            NodeId nll_real = weighted_nll_node(t, c_real, b.real_labels,
                                                std::vector<double>(b.real_labels.size(), 1.0));
            NodeId nll_fake = weighted_nll_node(t, c_fake, b.fake_labels, w_d);
            NodeId loss = t.add(t.axpb(nll_real, cfg.alpha, 0.0),
                                t.axpb(nll_fake, 1.0 - cfg.alpha, 0.0));
            const double lv = t.value(loss).data[0];
            check_finite(lv, "loss_C", ep.epoch, step);
            ep.loss_c_real += cfg.alpha * t.value(nll_real).data[0];
            ep.loss_c_fake += (1.0 - cfg.alpha) * t.value(nll_fake).data[0];
            t.backward(loss);
            nd::adam_update(state.clf.params(), collect_grads(t, pc), state.opt_c);
        }

        // (4) generator step: adversarial term plus cooperative classifier
        // term on the true labels Y'
        {
            Tape t;
            const auto pg = nets::lift_params(t, state.gen, true);
            const auto pd = nets::lift_params(t, state.disc, false);
            const auto pc = nets::lift_params(t, state.clf, false);
            NodeId xhat = nets::generator_forward(t, state.gen, pg, t.constant(b.x_mask),
                                                  t.constant(b.mask), t.constant(b.one_hot_fake));
            NodeId xprime = t.masked_merge(b.x_mask, xhat, b.mask);
            NodeId d_fake = nets::discriminator_forward(t, state.disc, pd, xprime,
                                                        t.constant(b.one_hot_fake));
            NodeId adv = loss_g_adv_node(t, d_fake, b.mask);
            NodeId c_fake = nets::classifier_forward_flat(t, state.clf, pc, xprime);
            NodeId coop = weighted_nll_node(t, c_fake, b.fake_labels, w_d);
            NodeId loss = t.add(adv, t.axpb(coop, 1.0 - cfg.alpha, 0.0));
            const double lv = t.value(loss).data[0];
            check_finite(lv, "loss_G", ep.epoch, step);
            ep.loss_g_adv += t.value(adv).data[0];
            t.backward(loss);
            nd::adam_update(state.gen.params(), collect_grads(t, pg), state.opt_g);
        }
    }
    const double inv = 1.0 / static_cast<double>(steps);
    ep.loss_d *= inv;
    ep.loss_g_adv *= inv;
    ep.loss_c_real *= inv;
    ep.loss_c_fake *= inv;
    state.epoch += 1;
    state.history.push_back(ep);
}

TripletState train(const Dataset& ds_train, const TrainConfig& cfg) {
    TripletState st = init_triplet(ds_train, cfg);
    const ClassPriors priors = data::compute_priors(ds_train);
    for (std::size_t e = 0; e < cfg.epochs; ++e) train_epoch(st, ds_train, priors, cfg);
    return st;
}

ClassifierRun train_classifier(const Dataset& ds, const TrainConfig& cfg,
                               const std::vector<double>& class_weights) {
    cfg.validate();
    if (!ds.stats.has_value()) {
        throw std::invalid_argument("train_classifier: dataset must be standardized first");
    }
    Rng rng(cfg.seed);
    ClassifierRun run;
    run.net = nets::build_classifier(cfg.nets, ds.channels(), ds.length(), ds.meta_dim(),
                                     ds.class_count, rng);
    nd::AdamState opt = nd::AdamState::for_params(run.net.params(), cfg.lr, cfg.beta1, cfg.beta2,
                                                  cfg.adam_eps);
    const std::size_t n = ds.size();
    const std::size_t k = ds.channels(), m = ds.length(), d = ds.meta_dim();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t j = i + rng.uniform_index(n - i);
            std::swap(order[i], order[j]);
        }
        EpochLosses ep;
        ep.epoch = e + 1;
        std::size_t steps = 0;
        for (std::size_t lo = 0; lo < n; lo += cfg.n_mb, ++steps) {
            const std::size_t hi = std::min(n, lo + cfg.n_mb);
            const std::size_t nb = hi - lo;
            Array series = Array::zeros({nb, k, m});
            Array meta = d > 0 ? Array::zeros({nb, d}) : Array();
            std::vector<int> labels(nb);
            std::vector<double> weights(nb, 1.0);
            for (std::size_t i = lo; i < hi; ++i) {
                const data::Sample& s = ds.samples[order[i]];
                const std::size_t r = i - lo;
                std::copy(s.series.data.begin(), s.series.data.end(),
                          series.data.begin() + static_cast<std::ptrdiff_t>(r * k * m));
                for (std::size_t j = 0; j < d; ++j) meta.at(r, j) = s.metadata.data[j];
                labels[r] = s.label;
                if (!class_weights.empty()) {
                    weights[r] = class_weights[static_cast<std::size_t>(s.label)];
                }
            }
            Tape t;
            const auto pc = nets::lift_params(t, run.net, true);
            NodeId meta_node = d > 0 ? t.constant(meta) : -1;
            NodeId probs = nets::classifier_forward(t, run.net, pc, t.constant(series), meta_node);
            NodeId loss = weighted_nll_node(t, probs, labels, weights);
            const double lv = t.value(loss).data[0];
            check_finite(lv, "classifier loss", e + 1, steps);
            ep.loss_c_real += lv;
            t.backward(loss);
            nd::adam_update(run.net.params(), collect_grads(t, pc), opt);
        }
        ep.loss_c_real /= static_cast<double>(steps);
        run.history.push_back(ep);
    }
    return run;
}

metrics::MetricsReport evaluate(const nets::ClassifierNet& clf, const Dataset& ds_test) {
    if (ds_test.samples.empty()) throw std::invalid_argument("evaluate: empty test set");
    const std::size_t n = ds_test.size();
    std::vector<int> truth(n), predicted(n);
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(clf.classes),
                                            std::vector<double>(n));
    const std::size_t chunk = 256;
    for (std::size_t lo = 0; lo < n; lo += chunk) {
        const std::size_t hi = std::min(n, lo + chunk);
        std::vector<std::size_t> idx;
        for (std::size_t i = lo; i < hi; ++i) idx.push_back(i);
        const Array probs = nets::classifier_probs(clf, ds_test, idx);
        for (std::size_t i = lo; i < hi; ++i) {
            truth[i] = ds_test.samples[i].label;
            const std::size_t r = i - lo;
            int best = 0;
            for (int y = 0; y < clf.classes; ++y) {
                const double p = probs.at(r, static_cast<std::size_t>(y));
                scores[static_cast<std::size_t>(y)][i] = p;
                if (p > probs.at(r, static_cast<std::size_t>(best))) best = y;
            }
            predicted[i] = best;
        }
    }
    const auto cm = metrics::ConfusionMatrix::from_predictions(truth, predicted, clf.classes);
    metrics::MetricsReport rep;
    rep.balanced_accuracy = metrics::balanced_accuracy(cm);
    rep.macro_f1 = metrics::macro_f1(cm);
    rep.pr_auc = metrics::macro_pr_auc(scores, truth, clf.classes);
    rep.per_class_precision = metrics::per_class_precision(cm);
    rep.per_class_recall = metrics::per_class_recall(cm);
    return rep;
}

nd::LossBuilder triplet_loss_builder(const nets::GeneratorNet& gen,
                                     const nets::DiscriminatorNet& disc,
                                     const nets::ClassifierNet& clf, const StepBatch& batch,
                                     const std::vector<double>& w_d, double alpha) {
    const std::size_t ng = gen.params().size();
    const std::size_t nd_ = disc.params().size();
    return [&gen, &disc, &clf, batch, w_d, alpha, ng, nd_](Tape& t,
                                                           const std::vector<NodeId>& p) {
        const std::vector<NodeId> pg(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(ng));
        const std::vector<NodeId> pd(p.begin() + static_cast<std::ptrdiff_t>(ng),
                                     p.begin() + static_cast<std::ptrdiff_t>(ng + nd_));
        const std::vector<NodeId> pc(p.begin() + static_cast<std::ptrdiff_t>(ng + nd_), p.end());
        NodeId xhat = nets::generator_forward(t, gen, pg, t.constant(batch.x_mask),
                                              t.constant(batch.mask),
                                              t.constant(batch.one_hot_fake));
        NodeId xprime = t.masked_merge(batch.x_mask, xhat, batch.mask);
        NodeId d_fake = nets::discriminator_forward(t, disc, pd, xprime,
                                                    t.constant(batch.one_hot_fake));
        NodeId d_real = nets::discriminator_forward(t, disc, pd, t.constant(batch.real_flat),
                                                    t.constant(batch.one_hot_real));
        NodeId ld = loss_d_node(t, d_real, d_fake, batch.mask);
        NodeId lg = t.add(loss_g_adv_node(t, d_fake, batch.mask),
                          t.axpb(weighted_nll_node(
                                     t, nets::classifier_forward_flat(t, clf, pc, xprime),
                                     batch.fake_labels, w_d),
                                 1.0 - alpha, 0.0));
        NodeId meta = clf.d_meta > 0 ? t.constant(batch.real_meta) : -1;
        NodeId c_real = nets::classifier_forward(t, clf, pc, t.constant(batch.real_series), meta);
        NodeId c_fake = nets::classifier_forward_flat(t, clf, pc, xprime);
        NodeId lc = loss_c_node(t, c_real, batch.real_labels, c_fake, batch.fake_labels, w_d,
                                alpha);
        return t.add(ld, t.add(lg, lc));
    };
}

}  // namespace ibgan::train
