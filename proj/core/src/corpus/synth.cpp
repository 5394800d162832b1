#include "permdet/corpus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "permdet/util/rng.hpp"

namespace permdet::corpus {

std::vector<MarkerRule> default_marker_rules() {
    return {
        MarkerRule{{"android.permission.SEND_SMS",
                    "android.permission.RECEIVE_BOOT_COMPLETED"}},
        MarkerRule{{"android.permission.READ_CONTACTS",
                    "android.permission.WRITE_EXTERNAL_STORAGE",
                    "android.permission.INTERNET"}},
    };
}

namespace {

std::string fake_id(util::Rng& rng) {
    static const char* hexdig = "0123456789abcdef";
    std::string id(64, '0');
    for (auto& c : id) c = hexdig[rng.index(16)];
    return id;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

int draw_flags(util::Rng& rng, bool malware, double flag_noise) {
    if (rng.bernoulli(flag_noise)) {
        // Off-profile draw: anywhere in the ambiguous gap or the wrong side.
        return static_cast<int>(rng.uniform(21));
    }
    if (malware) return 6 + static_cast<int>(rng.uniform(15));  // 6..20
    double u = rng.real();
    if (u < 0.80) return 0;
    if (u < 0.95) return 1;
    return 2;
}

}  // namespace

Records synth_generate(const SynthSpec& spec) {
    if (!spec.marker_rules.empty())
        for (const auto& rule : spec.marker_rules)
            if (rule.required.empty())
                throw std::invalid_argument("marker rule with no required tokens");
    if (spec.n_malware > 0 && spec.marker_rules.empty())
        throw std::invalid_argument("malware generation needs marker rules");
    if (spec.min_perms == 0 || spec.max_perms < spec.min_perms)
        throw std::invalid_argument("bad permission count range");

    util::Rng rng(spec.seed);

    std::vector<std::string> fillers(spec.vocab_size);
    for (size_t i = 0; i < spec.vocab_size; ++i)
        fillers[i] = "android.permission.SYNTH_" + std::to_string(i + spec.vocab_offset);

    auto draw_fillers = [&](size_t count, std::vector<std::string>& out) {
        std::unordered_set<size_t> used;
        while (out.size() < count && used.size() < fillers.size()) {
            size_t j = rng.index(fillers.size());
            if (used.insert(j).second) out.push_back(fillers[j]);
        }
    };

    Records records;
    records.reserve(spec.n_benign + spec.n_malware);

    for (size_t i = 0; i < spec.n_benign; ++i) {
        std::vector<std::string> perms;
        size_t count = spec.min_perms + rng.index(spec.max_perms - spec.min_perms + 1);
        // Sometimes salt a benign app with a proper subset of a rule's
        // markers so no single token decides the label.
        if (!spec.marker_rules.empty() && rng.bernoulli(0.3)) {
            const auto& rule = spec.marker_rules[rng.index(spec.marker_rules.size())];
            if (rule.required.size() > 1) {
                size_t take = rule.required.size() - 1;
                for (size_t k = 0; k < take; ++k) perms.push_back(rule.required[k]);
            }
        }
        draw_fillers(count, perms);
        rng.shuffle(perms);
        CorpusRecord rec;
        rec.id = fake_id(rng);
        rec.text = join(perms);
        rec.label = Label::Benign;
        records.push_back(std::move(rec));
    }

    for (size_t i = 0; i < spec.n_malware; ++i) {
        const auto& rule = spec.marker_rules[rng.index(spec.marker_rules.size())];
        std::vector<std::string> perms = rule.required;
        size_t count = perms.size() +
                       rng.index(spec.max_perms - std::min(spec.max_perms, perms.size()) + 1);
        draw_fillers(count, perms);
        rng.shuffle(perms);
        CorpusRecord rec;
        rec.id = fake_id(rng);
        rec.text = join(perms);
        rec.label = Label::Malware;
        records.push_back(std::move(rec));
    }

    rng.shuffle(records);

    if (spec.assign_flags) {
        for (auto& rec : records)
            rec.vt_flags = draw_flags(rng, rec.label == Label::Malware, spec.flag_noise);
    }
    if (spec.year) {
        for (auto& rec : records) rec.year = spec.year;
    }

    // Flip exactly round(noise * n) labels.
    size_t n = records.size();
    auto flips = static_cast<size_t>(std::llround(spec.noise * static_cast<double>(n)));
    if (flips > 0) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = 0; i < flips && i < n; ++i) {
            size_t j = i + rng.index(n - i);
            std::swap(idx[i], idx[j]);
        }
        for (size_t i = 0; i < flips && i < n; ++i) {
            auto& lab = records[idx[i]].label;
            lab = lab == Label::Benign ? Label::Malware : Label::Benign;
        }
    }
    return records;
}

Records synth_generate(size_t n_benign, size_t n_malware, size_t vocab_size,
                       const std::vector<MarkerRule>& rules, double noise,
                       uint64_t seed) {
    SynthSpec spec;
    spec.n_benign = n_benign;
    spec.n_malware = n_malware;
    spec.vocab_size = vocab_size;
    spec.marker_rules = rules;
    spec.noise = noise;
    spec.seed = seed;
    return synth_generate(spec);
}

}  // namespace permdet::corpus
