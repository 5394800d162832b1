#pragma once

#include <map>
#include <stdexcept>

#include "permdet/corpus/record.hpp"

namespace permdet::corpus {

struct MissingFlags : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadThreshold : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A benign/malware flag-count partition. Flags strictly between the bounds
// are dropped: ambiguous apps poison labels.
struct ThresholdRule {
    int benign_max = 0;   // inclusive upper flag bound for benign
    int malware_min = 1;  // inclusive lower flag bound for malware

    ThresholdRule(int bmax, int mmin) : benign_max(bmax), malware_min(mmin) {
        if (bmax < 0 || bmax >= mmin)
            throw BadThreshold("require 0 <= benign_max < malware_min");
    }
    std::string name() const {
        return "benign<=" + std::to_string(benign_max) +
               "_malware>=" + std::to_string(malware_min);
    }
};

struct LabelingResult {
    Records labeled;
    size_t dropped = 0;
};

// flags <= benign_max -> Benign; flags >= malware_min -> Malware; the gap is
// excluded and counted. Every record must carry vt_flags.
LabelingResult label_by_flags(const Records& records, const ThresholdRule& rule);

struct FlagHistogram {
    std::map<int, size_t> counts;  // flag count -> app count
    int max_flag = 0;
    size_t total = 0;
};

FlagHistogram flag_histogram(const Records& records);

}  // namespace permdet::corpus
