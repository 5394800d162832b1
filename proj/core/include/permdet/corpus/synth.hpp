#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "permdet/corpus/record.hpp"

namespace permdet::corpus {

// A label-determining permission pattern: a record is malware iff some rule's
// required tokens are all present.
struct MarkerRule {
    std::vector<std::string> required;
};

struct SynthSpec {
    size_t n_benign = 0;
    size_t n_malware = 0;
    size_t vocab_size = 30;  // filler permission vocabulary size
    std::vector<MarkerRule> marker_rules;
    double noise = 0.0;  // fraction of labels flipped, exactly round(noise*n)
    uint64_t seed = 0;

    // Extensions for the experiment harnesses.
    std::optional<int> year;   // stamp every record
    bool assign_flags = false; // vt_flags correlated with the pre-noise label
    double flag_noise = 0.0;   // probability of an off-profile flag draw
    size_t vocab_offset = 0;   // shifts filler token names (drift corpora)
    size_t min_perms = 3;
    size_t max_perms = 10;
};

std::vector<MarkerRule> default_marker_rules();

// Deterministic per seed. Labels are rule-consistent except the flipped
// noise fraction; benign records sometimes carry a proper subset of a rule's
// markers so single tokens are not perfectly predictive.
Records synth_generate(const SynthSpec& spec);

Records synth_generate(size_t n_benign, size_t n_malware, size_t vocab_size,
                       const std::vector<MarkerRule>& rules, double noise,
                       uint64_t seed);

}  // namespace permdet::corpus
