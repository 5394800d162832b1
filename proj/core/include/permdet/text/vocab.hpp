#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "permdet/corpus/record.hpp"

namespace permdet::text {

struct EmptyCorpus : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SegmentMode { Whole, Split };

// Special token ids, dense at the front of every vocabulary.
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kCls = 2;
inline constexpr int kSep = 3;
inline constexpr int kMask = 4;
inline constexpr int kNumSpecials = 5;

// Whole: the lowercased full permission string. Split: lowercase, split on
// '.' and '_', empties dropped.
std::vector<std::string> segment(const std::string& permission, SegmentMode mode);

// Segments a whole space-joined permission text.
std::vector<std::string> segment_text(const std::string& text, SegmentMode mode);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(SegmentMode mode, int min_count, std::vector<std::string> tokens);

    SegmentMode mode() const { return mode_; }
    int min_count() const { return min_count_; }
    int size() const { return static_cast<int>(id_to_token_.size()); }

    // Total: unknown strings map to [UNK].
    int id_of(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnk : it->second;
    }
    const std::string& token_of(int id) const { return id_to_token_.at(id); }

    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    SegmentMode mode_ = SegmentMode::Split;
    int min_count_ = 1;
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

// Tokens with corpus frequency >= min_count, ids ordered by descending
// frequency then lexicographic; specials prepended.
Vocabulary build_vocab(const corpus::Records& records, SegmentMode mode,
                       int min_count);

}  // namespace permdet::text
