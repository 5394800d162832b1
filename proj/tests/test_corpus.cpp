#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "permdet/corpus/corpus_io.hpp"
#include "permdet/corpus/labeling.hpp"
#include "permdet/corpus/sampling.hpp"
#include "permdet/corpus/synth.hpp"
#include "permdet/util/rng.hpp"

using namespace permdet;
using corpus::CorpusRecord;
using corpus::Label;
using corpus::Records;

namespace {

Records flagged_records(const std::vector<int>& flags) {
    Records out;
    for (size_t i = 0; i < flags.size(); ++i) {
        CorpusRecord r;
        r.id = "app" + std::to_string(i);
        r.vt_flags = flags[i];
        out.push_back(r);
    }
    return out;
}

// Independent oracle for the sample-size formula, computed in long double.
long long sample_size_oracle(std::optional<long long> population, double z,
                             double margin, double p) {
    long double n0 = static_cast<long double>(z) * z * p * (1.0L - p) /
                     (static_cast<long double>(margin) * margin);
    long double n = n0;
    if (population)
        n = n0 / (1.0L + (n0 - 1.0L) / static_cast<long double>(*population));
    return static_cast<long long>(std::ceil(static_cast<double>(n)));
}

}  // namespace

TEST_CASE("label_by_flags: bounds and the dropped gap") {
    corpus::ThresholdRule rule(0, 8);
    auto result = corpus::label_by_flags(flagged_records({0, 5, 12}), rule);
    REQUIRE(result.labeled.size() == 2);
    CHECK(result.labeled[0].label == Label::Benign);   // flags 0
    CHECK(result.labeled[1].label == Label::Malware);  // flags 12
    CHECK(result.dropped == 1);                        // flags 5

    CHECK_THROWS_AS(corpus::label_by_flags({CorpusRecord{}}, rule),
                    corpus::MissingFlags);
    CHECK_THROWS_AS(corpus::ThresholdRule(8, 8), corpus::BadThreshold);
}

TEST_CASE("property: label_by_flags partitions the input") {
    util::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> flags;
        size_t n = rng.index(200);
        for (size_t i = 0; i < n; ++i) flags.push_back(static_cast<int>(rng.uniform(25)));
        int bmax = static_cast<int>(rng.uniform(10));
        int mmin = bmax + 1 + static_cast<int>(rng.uniform(10));
        corpus::ThresholdRule rule(bmax, mmin);
        auto result = corpus::label_by_flags(flagged_records(flags), rule);

        size_t benign = 0, malware = 0;
        int benign_max_seen = -1, malware_min_seen = 1 << 20;
        for (const auto& r : result.labeled) {
            if (r.label == Label::Benign) {
                ++benign;
                benign_max_seen = std::max(benign_max_seen, *r.vt_flags);
            } else {
                ++malware;
                malware_min_seen = std::min(malware_min_seen, *r.vt_flags);
            }
        }
        CHECK(benign + malware + result.dropped == n);
        if (benign) CHECK(benign_max_seen <= rule.benign_max);
        if (malware) CHECK(malware_min_seen >= rule.malware_min);
    }
}

TEST_CASE("flag_histogram: counting and totals") {
    auto hist = corpus::flag_histogram(flagged_records({0, 0, 7}));
    CHECK(hist.counts.at(0) == 2);
    CHECK(hist.counts.at(7) == 1);
    CHECK(hist.max_flag == 7);
    CHECK(hist.total == 3);

    CHECK(corpus::flag_histogram({}).counts.empty());
}

TEST_CASE("sample_size: frozen formula values and errors") {
    corpus::SampleSizeSpec spec;
    spec.population = std::nullopt;
    spec.confidence = 0.95;
    spec.margin = 0.05;
    CHECK(corpus::sample_size(spec) == 385);

    // The corpus-sampling setting: 99% / 1.3% over the benign population.
    corpus::SampleSizeSpec drebin;
    drebin.population = 123453;
    drebin.confidence = 0.99;
    drebin.margin = 0.013;
    long long got = corpus::sample_size(drebin);
    CHECK(got == sample_size_oracle(123453, 2.576, 0.013, 0.5));
    CHECK(got == 9094);  // formula result; reference tooling reports 8911

    corpus::SampleSizeSpec bad = spec;
    bad.margin = 0.0;
    CHECK_THROWS_AS(corpus::sample_size(bad), corpus::BadMargin);
    corpus::SampleSizeSpec badconf = spec;
    badconf.confidence = 0.42;
    CHECK_THROWS_AS(corpus::sample_size(badconf), corpus::BadConfidence);
}

TEST_CASE("property: sample_size monotonicity") {
    util::Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        double margins[] = {0.01, 0.013, 0.02, 0.05, 0.1};
        double confidences[] = {0.90, 0.95, 0.99};
        double margin = margins[rng.index(5)];
        long long pop = 100 + static_cast<long long>(rng.uniform(1'000'000));

        corpus::SampleSizeSpec s;
        s.margin = margin;
        // non-decreasing in confidence
        long long prev = 0;
        for (double c : confidences) {
            s.confidence = c;
            s.population = std::nullopt;
            long long n = corpus::sample_size(s);
            CHECK(n >= prev);
            prev = n;
            // finite <= infinite
            s.population = pop;
            CHECK(corpus::sample_size(s) <= n);
        }
        // non-increasing in margin
        s.confidence = 0.95;
        s.population = std::nullopt;
        long long prev_m = std::numeric_limits<long long>::max();
        for (double m : margins) {
            s.margin = m;
            long long n = corpus::sample_size(s);
            CHECK(n <= prev_m);
            prev_m = n;
        }
        // maximized at p = 0.5
        s.margin = margin;
        corpus::SampleSizeSpec half = s;
        half.proportion = 0.5;
        corpus::SampleSizeSpec off = s;
        off.proportion = rng.real();
        CHECK(corpus::sample_size(off) <= corpus::sample_size(half));
    }
}

TEST_CASE("stratified_sample: counts, determinism, order invariance") {
    corpus::SynthSpec spec;
    spec.n_benign = 100;
    spec.n_malware = 100;
    spec.marker_rules = corpus::default_marker_rules();
    spec.seed = 5;
    Records records = corpus::synth_generate(spec);

    auto sample = corpus::stratified_sample(records, 10, 10, 7);
    REQUIRE(sample.size() == 20);
    size_t benign = 0;
    for (const auto& r : sample) benign += r.label == Label::Benign;
    CHECK(benign == 10);

    auto again = corpus::stratified_sample(records, 10, 10, 7);
    std::set<std::string> ids1, ids2;
    for (const auto& r : sample) ids1.insert(r.id);
    for (const auto& r : again) ids2.insert(r.id);
    CHECK(ids1 == ids2);

    // Permutation invariance: shuffle the input, same id set comes out.
    Records shuffled = records;
    util::Rng rng(99);
    rng.shuffle(shuffled);
    auto sample3 = corpus::stratified_sample(shuffled, 10, 10, 7);
    std::set<std::string> ids3;
    for (const auto& r : sample3) ids3.insert(r.id);
    CHECK(ids1 == ids3);

    CHECK_THROWS_AS(corpus::stratified_sample(records, 10, 150, 7),
                    corpus::InsufficientClass);
}

TEST_CASE("partition_by_year: buckets and exclusions") {
    Records records;
    for (int year : {2010, 2011, 2012, 2014, 2015}) {
        CorpusRecord r;
        r.id = "y" + std::to_string(year);
        r.year = year;
        records.push_back(r);
    }
    CorpusRecord no_year;
    no_year.id = "noyear";
    records.push_back(no_year);

    auto buckets = corpus::partition_by_year(records, {{2010, 2011}, {2014, 2015}});
    REQUIRE(buckets.size() == 2);
    CHECK(buckets[0].records.size() == 2);
    CHECK(buckets[1].records.size() == 2);
    // 2012 and the yearless record land nowhere.
    for (const auto& b : buckets)
        for (const auto& r : b.records) CHECK(r.id != "y2012");

    CHECK(corpus::partition_by_year({}, {{2010}}).at(0).records.empty());
}

TEST_CASE("synth_generate: rule consistency, noise, determinism") {
    auto rules = corpus::default_marker_rules();
    Records clean = corpus::synth_generate(50, 50, 30, rules, 0.0, 1);
    REQUIRE(clean.size() == 100);

    auto matches_any_rule = [&](const std::string& text) {
        for (const auto& rule : rules) {
            bool all = true;
            for (const auto& tok : rule.required)
                if (text.find(tok) == std::string::npos) all = false;
            if (all) return true;
        }
        return false;
    };
    for (const auto& r : clean)
        CHECK((r.label == Label::Malware) == matches_any_rule(r.text));

    // noise flips exactly round(noise * n) labels
    corpus::SynthSpec noisy;
    noisy.n_benign = 60;
    noisy.n_malware = 40;
    noisy.marker_rules = rules;
    noisy.noise = 0.1;
    noisy.seed = 2;
    Records flipped = corpus::synth_generate(noisy);
    size_t mismatches = 0;
    for (const auto& r : flipped)
        if ((r.label == Label::Malware) != matches_any_rule(r.text)) ++mismatches;
    CHECK(mismatches == 10);

    Records a = corpus::synth_generate(50, 50, 30, rules, 0.05, 42);
    Records b = corpus::synth_generate(50, 50, 30, rules, 0.05, 42);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].text == b[i].text);
        CHECK(a[i].label == b[i].label);
    }
}

TEST_CASE("corpus csv: lossless round-trip") {
    corpus::SynthSpec spec;
    spec.n_benign = 500;
    spec.n_malware = 500;
    spec.marker_rules = corpus::default_marker_rules();
    spec.assign_flags = true;
    spec.year = 2014;
    spec.seed = 3;
    Records records = corpus::synth_generate(spec);
    // Exercise quoting and the unlabeled state.
    records[0].text = "weird,token \"quoted\"";
    records[1].label = Label::Unlabeled;
    records[2].text = "line\nbreak";

    auto path = std::filesystem::temp_directory_path() / "permdet_corpus_rt.csv";
    corpus::write_corpus(path, records);
    Records back = corpus::read_corpus(path);
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].id == records[i].id);
        CHECK(back[i].text == records[i].text);
        CHECK(back[i].label == records[i].label);
        CHECK(back[i].vt_flags == records[i].vt_flags);
        CHECK(back[i].year == records[i].year);
    }
    std::filesystem::remove(path);
}

TEST_CASE("corpus csv: malformed rows report their line") {
    std::istringstream in("id,text,label\nabc,perm.a,0\nonly_two,fields\n");
    try {
        corpus::read_corpus(in);
        FAIL("expected MalformedRow");
    } catch (const util::MalformedRow& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("flag index csv: AndroZoo-style schema") {
    Records records;
    CorpusRecord r;
    r.id = std::string(64, 'a');
    r.vt_flags = 9;
    r.year = 2018;
    records.push_back(r);
    auto path = std::filesystem::temp_directory_path() / "permdet_flags.csv";
    corpus::write_flag_index(path, records);
    auto back = corpus::read_flag_index(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == r.id);
    CHECK(back[0].vt_flags == 9);
    CHECK(back[0].year == 2018);
    std::filesystem::remove(path);
}
