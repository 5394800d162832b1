#pragma once

#include <optional>

#include "permdet/corpus/record.hpp"
#include "permdet/nn/model.hpp"
#include "permdet/nn/optimizer.hpp"

namespace permdet::nn {

struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EpochStats {
    double train_loss = 0.0;
    double eval_loss = 0.0;
    double eval_accuracy = 0.0;
};

template <typename T>
struct TrainResult {
    ParameterStore<T> params;
    std::vector<EpochStats> trace;
};

// Encoded dataset: sequences plus labels aligned by index.
struct EncodedData {
    std::vector<text::TokenSequence> seqs;
    std::vector<int> labels;

    size_t size() const { return seqs.size(); }
};

EncodedData encode_records(const corpus::Records& records,
                           const text::Vocabulary& vocab, int max_len);

// Mini-batch AdamW with linear warmup over shuffled data; evaluates on
// `eval` after each epoch. Deterministic for a fixed seed.
template <typename T>
TrainResult<T> train_model(const EncodedData& train, const EncodedData& eval,
                           const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                           std::optional<ParameterStore<T>> initial = std::nullopt);

// The one-argument form splits off train_cfg.eval_fraction as the held-out
// set (seeded shuffle) before training.
template <typename T>
TrainResult<T> train_model(const corpus::Records& records,
                           const text::Vocabulary& vocab,
                           const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                           std::optional<ParameterStore<T>> initial = std::nullopt);

struct Prediction {
    std::vector<double> probs;  // size n_classes
    int label = 0;              // argmax; exact tie -> 0 (Benign)
};

template <typename T>
std::vector<Prediction> predict(const ParameterStore<T>& params,
                                const ModelConfig& cfg, const EncodedData& data,
                                int batch_size = 64);

template <typename T>
std::vector<Prediction> predict(const ParameterStore<T>& params,
                                const ModelConfig& cfg,
                                const corpus::Records& records,
                                const text::Vocabulary& vocab, int batch_size = 64);

#define PERMDET_EXTERN_TRAINER(T)                                                    \
    extern template TrainResult<T> train_model<T>(                                   \
        const EncodedData&, const EncodedData&, const ModelConfig&,                  \
        const TrainConfig&, std::optional<ParameterStore<T>>);                       \
    extern template TrainResult<T> train_model<T>(                                   \
        const corpus::Records&, const text::Vocabulary&, const ModelConfig&,         \
        const TrainConfig&, std::optional<ParameterStore<T>>);                       \
    extern template std::vector<Prediction> predict<T>(                              \
        const ParameterStore<T>&, const ModelConfig&, const EncodedData&, int);      \
    extern template std::vector<Prediction> predict<T>(                              \
        const ParameterStore<T>&, const ModelConfig&, const corpus::Records&,        \
        const text::Vocabulary&, int);
PERMDET_EXTERN_TRAINER(float)
PERMDET_EXTERN_TRAINER(double)
#undef PERMDET_EXTERN_TRAINER

}  // namespace permdet::nn
