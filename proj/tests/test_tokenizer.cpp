#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "permdet/corpus/synth.hpp"
#include "permdet/text/encode.hpp"
#include "permdet/text/vocab.hpp"
#include "permdet/util/rng.hpp"

using namespace permdet;
using text::SegmentMode;

namespace {

corpus::Records records_of(const std::vector<std::string>& texts) {
    corpus::Records out;
    for (const auto& t : texts) {
        corpus::CorpusRecord r;
        r.id = "x";
        r.text = t;
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("segment: split and whole modes") {
    CHECK(text::segment("android.permission.SEND_SMS", SegmentMode::Split) ==
          std::vector<std::string>{"android", "permission", "send", "sms"});
    CHECK(text::segment("android.permission.SEND_SMS", SegmentMode::Whole) ==
          std::vector<std::string>{"android.permission.send_sms"});
    CHECK(text::segment("..", SegmentMode::Split).empty());
    CHECK(text::segment("", SegmentMode::Whole).empty());
}

TEST_CASE("build_vocab: frequency threshold, ties, specials") {
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("internet");
    for (int i = 0; i < 3; ++i) texts.push_back("sms");
    auto vocab = text::build_vocab(records_of(texts), SegmentMode::Split, 5);
    CHECK(vocab.id_of("internet") == text::kNumSpecials);
    CHECK(vocab.id_of("sms") == text::kUnk);  // below min_count
    CHECK(vocab.token_of(text::kPad) == "[PAD]");
    CHECK(vocab.token_of(text::kMask) == "[MASK]");

    CHECK_THROWS_AS(text::build_vocab({}, SegmentMode::Split, 1), text::EmptyCorpus);

    // Equal-frequency tie: lexicographic, stable across runs.
    auto tied = text::build_vocab(records_of({"zeta alpha", "zeta alpha"}),
                                  SegmentMode::Split, 1);
    CHECK(tied.id_of("alpha") == text::kNumSpecials);
    CHECK(tied.id_of("zeta") == text::kNumSpecials + 1);
}

TEST_CASE("encode: construction, truncation, empty text") {
    auto vocab = text::build_vocab(records_of({"aa bb"}), SegmentMode::Split, 1);
    int t1 = vocab.id_of("aa"), t2 = vocab.id_of("bb");

    auto seq = text::encode("aa bb", vocab, 6);
    CHECK(seq.ids == std::vector<int>{text::kCls, t1, t2, text::kSep, text::kPad,
                                      text::kPad});
    CHECK(seq.mask == std::vector<int>{1, 1, 1, 1, 0, 0});
    CHECK(seq.true_length == 4);

    auto empty = text::encode("", vocab, 8);
    CHECK(empty.true_length == 2);
    CHECK(empty.ids[0] == text::kCls);
    CHECK(empty.ids[1] == text::kSep);

    std::string many;
    for (int i = 0; i < 100; ++i) many += "aa ";
    auto truncated = text::encode(many, vocab, 16);
    CHECK(truncated.true_length == 16);
    int content = 0;
    for (int id : truncated.ids) content += id == t1;
    CHECK(content == 14);  // head truncation keeps max_len - 2 tokens

    CHECK_THROWS_AS(text::encode("aa", vocab, 2), text::BadMaxLen);
}

TEST_CASE("property: encode mask/pad invariants and decode round-trip") {
    corpus::SynthSpec spec;
    spec.n_benign = 40;
    spec.n_malware = 40;
    spec.marker_rules = corpus::default_marker_rules();
    spec.seed = 9;
    auto records = corpus::synth_generate(spec);
    auto vocab = text::build_vocab(records, SegmentMode::Split, 1);

    for (const auto& rec : records) {
        auto seq = text::encode(rec.text, vocab, 48);
        int mask_sum = std::accumulate(seq.mask.begin(), seq.mask.end(), 0);
        CHECK(mask_sum == seq.true_length);
        for (size_t i = 0; i < seq.ids.size(); ++i)
            if (!seq.mask[i]) CHECK(seq.ids[i] == text::kPad);

        // In-vocabulary split text: decode recovers the segmentation.
        auto segmented = text::segment_text(rec.text, SegmentMode::Split);
        if (segmented.size() <= 46)
            CHECK(text::decode(seq, vocab) == segmented);
    }
}

TEST_CASE("vocabulary json round-trip") {
    auto vocab = text::build_vocab(
        records_of({"android.permission.SEND_SMS android.permission.INTERNET"}),
        SegmentMode::Split, 1);
    auto path = std::filesystem::temp_directory_path() / "permdet_vocab.json";
    vocab.save(path);
    auto loaded = text::Vocabulary::load(path);
    CHECK(loaded.size() == vocab.size());
    CHECK(loaded.mode() == vocab.mode());
    CHECK(loaded.min_count() == vocab.min_count());
    for (int id = 0; id < vocab.size(); ++id)
        CHECK(loaded.token_of(id) == vocab.token_of(id));
    std::filesystem::remove(path);
}
