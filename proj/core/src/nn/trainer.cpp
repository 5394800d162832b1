#include "permdet/nn/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace permdet::nn {

EncodedData encode_records(const corpus::Records& records,
                           const text::Vocabulary& vocab, int max_len) {
    EncodedData data;
    data.seqs.reserve(records.size());
    data.labels.reserve(records.size());
    for (const auto& rec : records) {
        data.seqs.push_back(text::encode(rec.text, vocab, max_len));
        data.labels.push_back(rec.label == corpus::Label::Malware ? 1 : 0);
    }
    return data;
}

namespace {

EncodedData take(const EncodedData& data, const std::vector<size_t>& idx,
                 size_t begin, size_t end) {
    EncodedData out;
    out.seqs.reserve(end - begin);
    out.labels.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) {
        out.seqs.push_back(data.seqs[idx[i]]);
        out.labels.push_back(data.labels[idx[i]]);
    }
    return out;
}

template <typename T>
std::pair<double, double> evaluate(const ParameterStore<T>& params,
                                   const ModelConfig& cfg, const EncodedData& data,
                                   int batch_size) {
    if (data.size() == 0) return {0.0, 0.0};
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t start = 0; start < data.size(); start += static_cast<size_t>(batch_size)) {
        size_t stop = std::min(data.size(), start + static_cast<size_t>(batch_size));
        Batch batch = Batch::from_sequences(
            std::span(data.seqs).subspan(start, stop - start));
        std::vector<int> labels(data.labels.begin() + static_cast<long>(start),
                                data.labels.begin() + static_cast<long>(stop));
        auto out = forward(params, cfg, batch, RunMode::Eval);
        loss_sum += static_cast<double>(cross_entropy(out.logits, labels)) *
                    static_cast<double>(stop - start);
        size_t C = static_cast<size_t>(cfg.n_classes);
        for (size_t b = 0; b < batch.B; ++b) {
            const T* row = out.probs.ptr() + b * C;
            int pred = 0;
            for (size_t c = 1; c < C; ++c)
                if (row[c] > row[pred]) pred = static_cast<int>(c);
            if (pred == labels[b]) ++correct;
        }
    }
    return {loss_sum / static_cast<double>(data.size()),
            static_cast<double>(correct) / static_cast<double>(data.size())};
}

}  // namespace

template <typename T>
TrainResult<T> train_model(const EncodedData& train, const EncodedData& eval,
                           const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                           std::optional<ParameterStore<T>> initial) {
    model_cfg.validate();
    train_cfg.validate();
    if (train.size() == 0) throw EmptyDataset("no training records");

    TrainResult<T> result;
    result.params = initial ? std::move(*initial)
                            : ParameterStore<T>::init(model_cfg, train_cfg.seed);
    auto adam = AdamWState<T>::init(result.params);
    auto trainable = trainable_mask(model_cfg, result.params);

    util::Rng shuffle_rng(util::splitmix64(train_cfg.seed ^ 0x7d1511e5ULL));
    util::Rng dropout_rng(util::splitmix64(train_cfg.seed ^ 0xd20b0a70ULL));

    size_t n = train.size();
    auto bs = static_cast<size_t>(train_cfg.batch_size);
    long long steps_per_epoch = static_cast<long long>((n + bs - 1) / bs);
    long long total_steps = steps_per_epoch * train_cfg.epochs;
    long long step = 0;

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t start = 0; start < n; start += bs) {
            size_t stop = std::min(n, start + bs);
            std::vector<text::TokenSequence> seqs;
            std::vector<int> labels;
            seqs.reserve(stop - start);
            for (size_t i = start; i < stop; ++i) {
                seqs.push_back(train.seqs[order[i]]);
                labels.push_back(train.labels[order[i]]);
            }
            Batch batch = Batch::from_sequences(seqs);
            auto back = backward(result.params, model_cfg, batch, labels,
                                 RunMode::Train, &dropout_rng);
            double lr = lr_schedule(step, total_steps, train_cfg.warmup_fraction,
                                    train_cfg.learning_rate);
            adamw_step(result.params, back.grads, adam, train_cfg, lr, trainable);
            ++step;
            loss_sum += static_cast<double>(back.loss) * static_cast<double>(stop - start);
        }
        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(n);
        auto [eval_loss, eval_acc] =
            evaluate(result.params, model_cfg, eval, train_cfg.batch_size);
        stats.eval_loss = eval_loss;
        stats.eval_accuracy = eval_acc;
        result.trace.push_back(stats);
    }
    return result;
}

template <typename T>
TrainResult<T> train_model(const corpus::Records& records,
                           const text::Vocabulary& vocab,
                           const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                           std::optional<ParameterStore<T>> initial) {
    if (records.empty()) throw EmptyDataset("no records");
    EncodedData all = encode_records(records, vocab, model_cfg.max_len);

    std::vector<size_t> idx(all.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    util::Rng rng(util::splitmix64(train_cfg.seed ^ 0x51173e4aULL));
    rng.shuffle(idx);
    auto n_eval = static_cast<size_t>(train_cfg.eval_fraction *
                                      static_cast<double>(all.size()));
    if (all.size() - n_eval == 0) throw EmptyDataset("split leaves no training data");

    EncodedData eval = take(all, idx, 0, n_eval);
    EncodedData train = take(all, idx, n_eval, all.size());
    return train_model<T>(train, eval, model_cfg, train_cfg, std::move(initial));
}

template <typename T>
std::vector<Prediction> predict(const ParameterStore<T>& params,
                                const ModelConfig& cfg, const EncodedData& data,
                                int batch_size) {
    std::vector<Prediction> out;
    out.reserve(data.size());
    auto C = static_cast<size_t>(cfg.n_classes);
    for (size_t start = 0; start < data.size(); start += static_cast<size_t>(batch_size)) {
        size_t stop = std::min(data.size(), start + static_cast<size_t>(batch_size));
        Batch batch = Batch::from_sequences(
            std::span(data.seqs).subspan(start, stop - start));
        auto fwd = forward(params, cfg, batch, RunMode::Eval);
        for (size_t b = 0; b < batch.B; ++b) {
            Prediction p;
            p.probs.resize(C);
            const T* row = fwd.probs.ptr() + b * C;
            for (size_t c = 0; c < C; ++c) p.probs[c] = static_cast<double>(row[c]);
            // Strict > keeps exact ties at class 0 (Benign).
            const T* lrow = fwd.logits.ptr() + b * C;
            int best = 0;
            for (size_t c = 1; c < C; ++c)
                if (lrow[c] > lrow[best]) best = static_cast<int>(c);
            p.label = best;
            out.push_back(std::move(p));
        }
    }
    return out;
}

template <typename T>
std::vector<Prediction> predict(const ParameterStore<T>& params,
                                const ModelConfig& cfg,
                                const corpus::Records& records,
                                const text::Vocabulary& vocab, int batch_size) {
    return predict(params, cfg, encode_records(records, vocab, cfg.max_len),
                   batch_size);
}

#define PERMDET_INSTANTIATE_TRAINER(T)                                              \
    template TrainResult<T> train_model<T>(const EncodedData&, const EncodedData&,  \
                                           const ModelConfig&, const TrainConfig&,  \
                                           std::optional<ParameterStore<T>>);       \
    template TrainResult<T> train_model<T>(const corpus::Records&,                  \
                                           const text::Vocabulary&,                 \
                                           const ModelConfig&, const TrainConfig&,  \
                                           std::optional<ParameterStore<T>>);       \
    template std::vector<Prediction> predict<T>(const ParameterStore<T>&,           \
                                                const ModelConfig&,                 \
                                                const EncodedData&, int);           \
    template std::vector<Prediction> predict<T>(const ParameterStore<T>&,           \
                                                const ModelConfig&,                 \
                                                const corpus::Records&,             \
                                                const text::Vocabulary&, int);
PERMDET_INSTANTIATE_TRAINER(float)
PERMDET_INSTANTIATE_TRAINER(double)
#undef PERMDET_INSTANTIATE_TRAINER

}  // namespace permdet::nn
