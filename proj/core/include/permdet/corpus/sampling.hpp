#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "permdet/corpus/record.hpp"

namespace permdet::corpus {

struct BadMargin : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct BadConfidence : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InsufficientClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Cochran sample-size inputs. population == nullopt means infinite.
struct SampleSizeSpec {
    std::optional<long long> population;  // positive, or nullopt = infinite
    double confidence = 0.95;             // in (0,1), from the supported set
    double margin = 0.05;                 // E, in (0,1)
    double proportion = 0.5;              // p, in [0,1]
};

// Two-sided normal quantile for the supported confidence levels
// (0.90 -> 1.645, 0.95 -> 1.96, 0.99 -> 2.576). Throws BadConfidence
// otherwise: the conventional table values are fixed on purpose.
double z_for_confidence(double confidence);

// n0 = Z^2 p(1-p) / E^2, finite-population corrected by
// n = n0 / (1 + (n0 - 1) / N), rounded up.
long long sample_size(const SampleSizeSpec& spec);

// Uniform without replacement per class, deterministic for a fixed seed and
// invariant to input order (records are sorted by id before drawing).
Records stratified_sample(const Records& records, size_t n_benign,
                          size_t n_malware, uint64_t seed);

struct YearBucket {
    std::set<int> years;
    Records records;
};

// Each record lands in every bucket whose year set contains its year;
// records with missing or unlisted years are excluded.
std::vector<YearBucket> partition_by_year(const Records& records,
                                          const std::vector<std::set<int>>& year_sets);

}  // namespace permdet::corpus
