#include "permdet/text/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

namespace permdet::text {

namespace {

const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> specials = {"[PAD]", "[UNK]", "[CLS]",
                                                      "[SEP]", "[MASK]"};
    return specials;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::vector<std::string> segment(const std::string& permission, SegmentMode mode) {
    std::string lower = lowercase(permission);
    if (mode == SegmentMode::Whole) {
        if (lower.empty()) return {};
        return {lower};
    }
    std::vector<std::string> out;
    std::string cur;
    for (char c : lower) {
        if (c == '.' || c == '_') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> segment_text(const std::string& text, SegmentMode mode) {
    std::vector<std::string> out;
    std::string perm;
    auto flush = [&] {
        if (perm.empty()) return;
        auto toks = segment(perm, mode);
        out.insert(out.end(), toks.begin(), toks.end());
        perm.clear();
    };
    for (char c : text) {
        if (c == ' ')
            flush();
        else
            perm += c;
    }
    flush();
    return out;
}

Vocabulary::Vocabulary(SegmentMode mode, int min_count,
                       std::vector<std::string> tokens)
    : mode_(mode), min_count_(min_count) {
    id_to_token_ = special_tokens();
    for (auto& t : tokens) id_to_token_.push_back(std::move(t));
    for (size_t i = 0; i < id_to_token_.size(); ++i)
        token_to_id_.emplace(id_to_token_[i], static_cast<int>(i));
}

Vocabulary build_vocab(const corpus::Records& records, SegmentMode mode,
                       int min_count) {
    if (min_count < 1) min_count = 1;
    std::unordered_map<std::string, size_t> freq;
    for (const auto& rec : records)
        for (const auto& tok : segment_text(rec.text, mode)) ++freq[tok];
    if (freq.empty()) throw EmptyCorpus("no tokens in corpus");

    std::vector<std::pair<std::string, size_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> tokens;
    for (auto& [tok, count] : entries)
        if (count >= static_cast<size_t>(min_count)) tokens.push_back(tok);
    return Vocabulary(mode, min_count, std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["mode"] = mode_ == SegmentMode::Split ? "split" : "whole";
    j["min_count"] = min_count_;
    // Specials are implicit: the file stores corpus tokens only, in id order.
    j["tokens"] = std::vector<std::string>(id_to_token_.begin() + kNumSpecials,
                                           id_to_token_.end());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    SegmentMode mode =
        j.at("mode").get<std::string>() == "whole" ? SegmentMode::Whole : SegmentMode::Split;
    return Vocabulary(mode, j.at("min_count").get<int>(),
                      j.at("tokens").get<std::vector<std::string>>());
}

}  // namespace permdet::text
