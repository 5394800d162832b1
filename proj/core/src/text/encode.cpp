#include "permdet/text/encode.hpp"

namespace permdet::text {

TokenSequence encode(const std::string& text, const Vocabulary& vocab, int max_len,
                     Truncation trunc) {
    if (max_len < 3) throw BadMaxLen("max_len must be >= 3");

    std::vector<std::string> tokens = segment_text(text, vocab.mode());
    size_t keep = static_cast<size_t>(max_len) - 2;
    if (tokens.size() > keep) {
        if (trunc == Truncation::Head)
            tokens.resize(keep);
        else
            tokens.erase(tokens.begin(), tokens.end() - static_cast<long>(keep));
    }

    TokenSequence seq;
    seq.ids.assign(static_cast<size_t>(max_len), kPad);
    seq.mask.assign(static_cast<size_t>(max_len), 0);
    size_t pos = 0;
    seq.ids[pos++] = kCls;
    for (const auto& tok : tokens) seq.ids[pos++] = vocab.id_of(tok);
    seq.ids[pos++] = kSep;
    seq.true_length = static_cast<int>(pos);
    for (size_t i = 0; i < pos; ++i) seq.mask[i] = 1;
    return seq;
}

std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab) {
    std::vector<std::string> out;
    for (int i = 0; i < seq.true_length; ++i) {
        int id = seq.ids[static_cast<size_t>(i)];
        if (id == kCls || id == kSep || id == kPad) continue;
        out.push_back(vocab.token_of(id));
    }
    return out;
}

}  // namespace permdet::text
