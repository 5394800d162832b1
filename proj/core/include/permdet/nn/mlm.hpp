#pragma once

#include "permdet/nn/trainer.hpp"

namespace permdet::nn {

struct NoMaskedPositions : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
struct MlmResult {
    ParameterStore<T> params;          // encoder usable as train() init
    std::vector<double> epoch_loss;    // mean masked-token loss per epoch
};

// Masked-token objective: mask_prob of the non-special tokens are selected;
// 80% become [MASK], 10% a random content token, 10% stay. Cross-entropy is
// computed on the selected positions only, with the token-embedding matrix
// tied as the output projection. Labels are ignored; pooler/head tensors are
// left untouched.
template <typename T>
MlmResult<T> pretrain_mlm(const corpus::Records& records,
                          const text::Vocabulary& vocab,
                          const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                          double mask_prob = 0.15);

extern template MlmResult<float> pretrain_mlm<float>(const corpus::Records&,
                                                     const text::Vocabulary&,
                                                     const ModelConfig&,
                                                     const TrainConfig&, double);
extern template MlmResult<double> pretrain_mlm<double>(const corpus::Records&,
                                                       const text::Vocabulary&,
                                                       const ModelConfig&,
                                                       const TrainConfig&, double);

}  // namespace permdet::nn
