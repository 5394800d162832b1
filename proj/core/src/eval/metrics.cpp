#include "permdet/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace permdet::eval {

ConfusionMatrix confusion(const std::vector<int>& predictions,
                          const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw LengthMismatch("predictions and labels differ in length");
    ConfusionMatrix cm;
    for (size_t i = 0; i < predictions.size(); ++i) {
        bool pred = predictions[i] == 1;
        bool truth = labels[i] == 1;
        if (pred && truth) ++cm.tp;
        else if (!pred && !truth) ++cm.tn;
        else if (pred && !truth) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

struct ClassView {
    double tp, fp, fn, tn;
};

ClasswiseMetric classwise(const ClassView& c0, const ClassView& c1, double total,
                          double (*f)(const ClassView&)) {
    ClasswiseMetric m;
    m.benign = f(c0);
    m.malware = f(c1);
    m.macro_avg = 0.5 * (m.benign + m.malware);
    double support0 = c0.tp + c0.fn;  // actual benign count
    double support1 = c1.tp + c1.fn;  // actual malware count
    m.weighted_avg = safe_div(support0 * m.benign + support1 * m.malware, total);
    return m;
}

}  // namespace

EvalMetrics metrics(const ConfusionMatrix& cm) {
    EvalMetrics out;
    auto tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
    auto fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
    double total = tp + tn + fp + fn;

    // One-vs-rest views: benign treats class 0 as positive.
    ClassView c1{tp, fp, fn, tn};
    ClassView c0{tn, fn, fp, tp};

    out.accuracy = classwise(c0, c1, total, [](const ClassView& c) {
        double t = c.tp + c.fp + c.fn + c.tn;
        return t == 0.0 ? 0.0 : (c.tp + c.tn) / t;
    });
    out.precision = classwise(c0, c1, total, [](const ClassView& c) {
        return safe_div(c.tp, c.tp + c.fp);
    });
    out.recall = classwise(c0, c1, total, [](const ClassView& c) {
        return safe_div(c.tp, c.tp + c.fn);
    });
    out.f1 = classwise(c0, c1, total, [](const ClassView& c) {
        double p = safe_div(c.tp, c.tp + c.fp);
        double r = safe_div(c.tp, c.tp + c.fn);
        return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    });

    double d1 = tp + fp, d2 = tp + fn, d3 = tn + fp, d4 = tn + fn;
    if (d1 == 0.0 || d2 == 0.0 || d3 == 0.0 || d4 == 0.0)
        out.mcc = 0.0;
    else
        out.mcc = (tp * tn - fp * fn) / std::sqrt(d1 * d2 * d3 * d4);
    return out;
}

EvalMetrics metrics(const ConfusionMatrix& cm, const std::vector<double>& scores,
                    const std::vector<int>& labels) {
    EvalMetrics out = metrics(cm);
    out.auc_roc = auc_roc(scores, labels);
    return out;
}

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw LengthMismatch("scores and labels differ in length");
    size_t n = scores.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t n_pos = 0, n_neg = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // Average rank of the tie group (ranks are 1-based).
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            } else {
                ++n_neg;
            }
        }
        i = j;
    }
    if (n_pos == 0 || n_neg == 0) return 0.5;
    double p = static_cast<double>(n_pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

std::array<double, kMetricCount> flatten(const EvalMetrics& m) {
    return {m.accuracy.benign,  m.accuracy.malware,  m.accuracy.macro_avg,
            m.accuracy.weighted_avg,
            m.precision.benign, m.precision.malware, m.precision.macro_avg,
            m.precision.weighted_avg,
            m.recall.benign,    m.recall.malware,    m.recall.macro_avg,
            m.recall.weighted_avg,
            m.f1.benign,        m.f1.malware,        m.f1.macro_avg,
            m.f1.weighted_avg,
            m.mcc,              m.auc_roc,           m.test_loss};
}

EvalMetrics unflatten(const std::array<double, kMetricCount>& v) {
    EvalMetrics m;
    m.accuracy = {v[0], v[1], v[2], v[3]};
    m.precision = {v[4], v[5], v[6], v[7]};
    m.recall = {v[8], v[9], v[10], v[11]};
    m.f1 = {v[12], v[13], v[14], v[15]};
    m.mcc = v[16];
    m.auc_roc = v[17];
    m.test_loss = v[18];
    return m;
}

const std::array<const char*, kMetricCount>& metric_names() {
    static const std::array<const char*, kMetricCount> names = {
        "accuracy_benign",  "accuracy_malware",  "accuracy_macro",  "accuracy_weighted",
        "precision_benign", "precision_malware", "precision_macro", "precision_weighted",
        "recall_benign",    "recall_malware",    "recall_macro",    "recall_weighted",
        "f1_benign",        "f1_malware",        "f1_macro",        "f1_weighted",
        "mcc",              "auc_roc",           "test_loss"};
    return names;
}

EvalMetrics metrics_mean(const std::vector<EvalMetrics>& samples) {
    std::array<double, kMetricCount> acc{};
    for (const auto& s : samples) {
        auto f = flatten(s);
        for (size_t i = 0; i < kMetricCount; ++i) acc[i] += f[i];
    }
    if (!samples.empty())
        for (auto& v : acc) v /= static_cast<double>(samples.size());
    return unflatten(acc);
}

EvalMetrics metrics_stddev(const std::vector<EvalMetrics>& samples) {
    std::array<double, kMetricCount> mean = flatten(metrics_mean(samples));
    std::array<double, kMetricCount> acc{};
    for (const auto& s : samples) {
        auto f = flatten(s);
        for (size_t i = 0; i < kMetricCount; ++i) {
            double dlt = f[i] - mean[i];
            acc[i] += dlt * dlt;
        }
    }
    if (samples.size() > 1)
        for (auto& v : acc)
            v = std::sqrt(v / static_cast<double>(samples.size() - 1));
    else
        acc.fill(0.0);
    return unflatten(acc);
}

}  // namespace permdet::eval
