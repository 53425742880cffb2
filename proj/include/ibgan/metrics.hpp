#pragma once

#include <optional>
#include <vector>

namespace ibgan::metrics {

/// Rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::vector<std::vector<long>> counts;

    static ConfusionMatrix from_predictions(const std::vector<int>& truth,
                                            const std::vector<int>& predicted, int classes);
    std::size_t classes() const { return counts.size(); }
    long total() const;
};

struct MetricsReport {
    double balanced_accuracy = 0.0;
    double macro_f1 = 0.0;
    double pr_auc = 0.0;
    std::vector<double> per_class_precision;
    std::vector<double> per_class_recall;
};

/// Macro-averaged recall. Every true class must have at least one sample.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Macro-averaged F1; classes with precision+recall = 0 contribute 0.
double macro_f1(const ConfusionMatrix& cm);

std::vector<double> per_class_precision(const ConfusionMatrix& cm);
std::vector<double> per_class_recall(const ConfusionMatrix& cm);

/// Average precision (step-sum over the PR curve), ties grouped by distinct
/// score. Requires at least one positive and one negative label.
double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels,
              int positive_class);

/// Mean of one-vs-rest average precision; scores[y] holds the per-sample
/// probability assigned to class y.
double macro_pr_auc(const std::vector<std::vector<double>>& scores,
                    const std::vector<int>& labels, int classes);

struct AggregateEntry {
    double mean = 0.0;
    std::optional<double> stddev;  // absent with a single report
};

struct AggregateReport {
    AggregateEntry balanced_accuracy, macro_f1, pr_auc;
    std::size_t n = 0;
};

/// Mean and sample (n-1) standard deviation per metric.
AggregateReport aggregate(const std::vector<MetricsReport>& reports);

}  // namespace ibgan::metrics
