#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace permdet::eval {

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malware (class 1) is the positive class throughout.
struct ConfusionMatrix {
    long long tp = 0;
    long long tn = 0;
    long long fp = 0;
    long long fn = 0;

    long long total() const { return tp + tn + fp + fn; }
};

ConfusionMatrix confusion(const std::vector<int>& predictions,
                          const std::vector<int>& labels);

// One metric seen from each class plus the two standard averages. In the
// binary one-vs-rest view the per-class accuracies coincide with overall
// accuracy.
struct ClasswiseMetric {
    double benign = 0.0;
    double malware = 0.0;
    double macro_avg = 0.0;
    double weighted_avg = 0.0;
};

struct EvalMetrics {
    ClasswiseMetric accuracy;
    ClasswiseMetric precision;
    ClasswiseMetric recall;
    ClasswiseMetric f1;
    double mcc = 0.0;
    double auc_roc = 0.5;
    double test_loss = 0.0;
};

// Degenerate denominators follow the 0 convention (and 0.5 for AUC with an
// empty class) so sweeps stay total.
EvalMetrics metrics(const ConfusionMatrix& cm);
EvalMetrics metrics(const ConfusionMatrix& cm, const std::vector<double>& scores,
                    const std::vector<int>& labels);

// Probability that a random positive outscores a random negative; ties count
// one half. Computed by the average-rank statistic.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

// Flat views used for aggregation and serialization.
inline constexpr size_t kMetricCount = 19;
std::array<double, kMetricCount> flatten(const EvalMetrics& m);
EvalMetrics unflatten(const std::array<double, kMetricCount>& v);
const std::array<const char*, kMetricCount>& metric_names();

EvalMetrics metrics_mean(const std::vector<EvalMetrics>& samples);
EvalMetrics metrics_stddev(const std::vector<EvalMetrics>& samples);

}  // namespace permdet::eval
