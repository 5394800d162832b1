#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace permdet::corpus {

enum class Label : int { Benign = 0, Malware = 1, Unlabeled = -1 };

inline int label_value(Label l) { return static_cast<int>(l); }

// One app: APK hash, space-joined permission tokens, label, optional
// antivirus flag count and binary-date year.
struct CorpusRecord {
    std::string id;
    std::string text;
    Label label = Label::Unlabeled;
    std::optional<int> vt_flags;
    std::optional<int> year;
};

using Records = std::vector<CorpusRecord>;

}  // namespace permdet::corpus
