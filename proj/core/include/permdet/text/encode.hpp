#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "permdet/text/vocab.hpp"

namespace permdet::text {

struct BadMaxLen : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Truncation { Head, Tail };  // Head keeps the earliest tokens

// Fixed-length id sequence: [CLS] content [SEP] padding. mask[i] = 1 iff
// i < true_length; padding positions hold [PAD].
struct TokenSequence {
    std::vector<int> ids;
    std::vector<int> mask;
    int true_length = 0;
};

TokenSequence encode(const std::string& text, const Vocabulary& vocab, int max_len,
                     Truncation trunc = Truncation::Head);

// Content tokens of an encoded sequence (specials and padding stripped).
std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab);

}  // namespace permdet::text
