#include "ibgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ibgan::metrics {

ConfusionMatrix ConfusionMatrix::from_predictions(const std::vector<int>& truth,
                                                  const std::vector<int>& predicted,
                                                  int classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("ConfusionMatrix: truth/prediction size mismatch");
    }
    ConfusionMatrix cm;
    cm.counts.assign(static_cast<std::size_t>(classes),
                     std::vector<long>(static_cast<std::size_t>(classes), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= classes || p < 0 || p >= classes) {
            throw std::invalid_argument("ConfusionMatrix: label out of range at sample " +
                                        std::to_string(i));
        }
        cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1;
    }
    return cm;
}

long ConfusionMatrix::total() const {
    long n = 0;
    for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
    return n;
}

namespace {

long row_sum(const ConfusionMatrix& cm, std::size_t y) {
    return std::accumulate(cm.counts[y].begin(), cm.counts[y].end(), 0L);
}

long col_sum(const ConfusionMatrix& cm, std::size_t y) {
    long s = 0;
    for (const auto& row : cm.counts) s += row[y];
    return s;
}

void require_nonempty_rows(const ConfusionMatrix& cm, const char* what) {
    for (std::size_t y = 0; y < cm.classes(); ++y) {
        if (row_sum(cm, y) == 0) {
            throw std::invalid_argument(std::string(what) + ": true class " + std::to_string(y) +
                                        " has no samples");
        }
    }
}

}  // namespace

double balanced_accuracy(const ConfusionMatrix& cm) {
    require_nonempty_rows(cm, "balanced_accuracy");
    double acc = 0.0;
    for (std::size_t y = 0; y < cm.classes(); ++y) {
        acc += static_cast<double>(cm.counts[y][y]) / static_cast<double>(row_sum(cm, y));
    }
    return acc / static_cast<double>(cm.classes());
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
    require_nonempty_rows(cm, "per_class_recall");
    std::vector<double> r(cm.classes());
    for (std::size_t y = 0; y < cm.classes(); ++y) {
        r[y] = static_cast<double>(cm.counts[y][y]) / static_cast<double>(row_sum(cm, y));
    }
    return r;
}

std::vector<double> per_class_precision(const ConfusionMatrix& cm) {
    std::vector<double> p(cm.classes());
    for (std::size_t y = 0; y < cm.classes(); ++y) {
        const long cs = col_sum(cm, y);
        p[y] = cs == 0 ? 0.0 : static_cast<double>(cm.counts[y][y]) / static_cast<double>(cs);
    }
    return p;
}

double macro_f1(const ConfusionMatrix& cm) {
    require_nonempty_rows(cm, "macro_f1");
    const auto p = per_class_precision(cm);
    const auto r = per_class_recall(cm);
    double acc = 0.0;
    for (std::size_t y = 0; y < cm.classes(); ++y) {
        const double denom = p[y] + r[y];
        acc += denom == 0.0 ? 0.0 : 2.0 * p[y] * r[y] / denom;
    }
    return acc / static_cast<double>(cm.classes());
}

double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels,
              int positive_class) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("pr_auc: scores/labels size mismatch or empty");
    }
    long total_pos = 0;
    for (int y : labels) total_pos += (y == positive_class) ? 1 : 0;
    const long total_neg = static_cast<long>(labels.size()) - total_pos;
    if (total_pos == 0 || total_neg == 0) {
        throw std::invalid_argument("pr_auc: need at least one positive and one negative label");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    double prev_recall = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        // group tied scores so a threshold never splits them
        const double s = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == s) {
            if (labels[idx[i]] == positive_class) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

double macro_pr_auc(const std::vector<std::vector<double>>& scores,
                    const std::vector<int>& labels, int classes) {
    if (scores.size() != static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("macro_pr_auc: need one score vector per class");
    }
    double acc = 0.0;
    for (int y = 0; y < classes; ++y) {
        acc += pr_auc(scores[static_cast<std::size_t>(y)], labels, y);
    }
    return acc / static_cast<double>(classes);
}

AggregateReport aggregate(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    auto agg = [&](auto getter) {
        AggregateEntry e;
        for (const auto& r : reports) e.mean += getter(r);
        e.mean /= static_cast<double>(reports.size());
        if (reports.size() >= 2) {
            double ss = 0.0;
            for (const auto& r : reports) {
                const double d = getter(r) - e.mean;
                ss += d * d;
            }
            e.stddev = std::sqrt(ss / static_cast<double>(reports.size() - 1));
        }
        return e;
    };
    AggregateReport out;
    out.n = reports.size();
    out.balanced_accuracy = agg([](const MetricsReport& r) { return r.balanced_accuracy; });
    out.macro_f1 = agg([](const MetricsReport& r) { return r.macro_f1; });
    out.pr_auc = agg([](const MetricsReport& r) { return r.pr_auc; });
    return out;
}

}  // namespace ibgan::metrics
