#include "permdet/corpus/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "permdet/util/rng.hpp"

namespace permdet::corpus {

double z_for_confidence(double confidence) {
    if (std::abs(confidence - 0.90) < 1e-9) return 1.645;
    if (std::abs(confidence - 0.95) < 1e-9) return 1.96;
    if (std::abs(confidence - 0.99) < 1e-9) return 2.576;
    throw BadConfidence("supported confidence levels: 0.90, 0.95, 0.99");
}

long long sample_size(const SampleSizeSpec& spec) {
    if (spec.margin <= 0.0 || spec.margin >= 1.0)
        throw BadMargin("margin must be in (0,1)");
    if (spec.proportion < 0.0 || spec.proportion > 1.0)
        throw BadMargin("proportion must be in [0,1]");
    if (spec.population && *spec.population <= 0)
        throw BadMargin("population must be positive");

    double z = z_for_confidence(spec.confidence);
    double p = spec.proportion;
    double n0 = z * z * p * (1.0 - p) / (spec.margin * spec.margin);
    double n = n0;
    if (spec.population) {
        double pop = static_cast<double>(*spec.population);
        n = n0 / (1.0 + (n0 - 1.0) / pop);
    }
    return static_cast<long long>(std::ceil(n));
}

namespace {

// Draw k distinct indices from [0, n) via a partial Fisher-Yates, then keep
// the sorted-id order stable for the output.
std::vector<size_t> draw_without_replacement(size_t n, size_t k, util::Rng& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + rng.index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

Records stratified_sample(const Records& records, size_t n_benign,
                          size_t n_malware, uint64_t seed) {
    std::vector<const CorpusRecord*> benign, malware;
    for (const auto& r : records) {
        if (r.label == Label::Benign) benign.push_back(&r);
        else if (r.label == Label::Malware) malware.push_back(&r);
    }
    if (benign.size() < n_benign)
        throw InsufficientClass("benign: have " + std::to_string(benign.size()) +
                                ", need " + std::to_string(n_benign));
    if (malware.size() < n_malware)
        throw InsufficientClass("malware: have " + std::to_string(malware.size()) +
                                ", need " + std::to_string(n_malware));

    // Sort by id so the draw is permutation-invariant w.r.t. input order.
    auto by_id = [](const CorpusRecord* a, const CorpusRecord* b) {
        return a->id < b->id;
    };
    std::sort(benign.begin(), benign.end(), by_id);
    std::sort(malware.begin(), malware.end(), by_id);

    util::Rng rng(seed);
    Records out;
    out.reserve(n_benign + n_malware);
    for (size_t i : draw_without_replacement(benign.size(), n_benign, rng))
        out.push_back(*benign[i]);
    for (size_t i : draw_without_replacement(malware.size(), n_malware, rng))
        out.push_back(*malware[i]);
    return out;
}

std::vector<YearBucket> partition_by_year(const Records& records,
                                          const std::vector<std::set<int>>& year_sets) {
    std::vector<YearBucket> buckets;
    buckets.reserve(year_sets.size());
    for (const auto& ys : year_sets) buckets.push_back(YearBucket{ys, {}});
    for (const auto& rec : records) {
        if (!rec.year) continue;
        for (auto& bucket : buckets)
            if (bucket.years.count(*rec.year)) bucket.records.push_back(rec);
    }
    return buckets;
}

}  // namespace permdet::corpus
