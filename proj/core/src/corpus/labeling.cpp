#include "permdet/corpus/labeling.hpp"

namespace permdet::corpus {

LabelingResult label_by_flags(const Records& records, const ThresholdRule& rule) {
    LabelingResult result;
    result.labeled.reserve(records.size());
    for (const auto& rec : records) {
        if (!rec.vt_flags) throw MissingFlags("record " + rec.id + " has no vt_flags");
        int flags = *rec.vt_flags;
        if (flags <= rule.benign_max) {
            CorpusRecord out = rec;
            out.label = Label::Benign;
            result.labeled.push_back(std::move(out));
        } else if (flags >= rule.malware_min) {
            CorpusRecord out = rec;
            out.label = Label::Malware;
            result.labeled.push_back(std::move(out));
        } else {
            ++result.dropped;
        }
    }
    return result;
}

FlagHistogram flag_histogram(const Records& records) {
    FlagHistogram hist;
    for (const auto& rec : records) {
        if (!rec.vt_flags) throw MissingFlags("record " + rec.id + " has no vt_flags");
        ++hist.counts[*rec.vt_flags];
        hist.max_flag = std::max(hist.max_flag, *rec.vt_flags);
        ++hist.total;
    }
    return hist;
}

}  // namespace permdet::corpus
