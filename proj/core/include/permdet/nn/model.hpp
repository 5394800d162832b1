#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "permdet/nn/params.hpp"
#include "permdet/text/encode.hpp"
#include "permdet/util/rng.hpp"

namespace permdet::nn {

struct BadLabel : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Row-major B x T token ids and attention mask.
struct Batch {
    size_t B = 0;
    size_t T = 0;
    std::vector<int> ids;
    std::vector<int> mask;

    // Packs sequences, trimming the time axis to the longest true_length
    // (bounded below so every row keeps [CLS]..[SEP]).
    static Batch from_sequences(std::span<const text::TokenSequence> seqs,
                                std::optional<size_t> fixed_len = std::nullopt);
};

enum class RunMode { Train, Eval };

template <typename T>
struct ForwardResult {
    Tensor<T> hidden;  // [B,T,d]
    Tensor<T> pooled;  // [B,d]
    Tensor<T> logits;  // [B,C]
    Tensor<T> probs;   // [B,C]
};

// Optional capture of the quantities the numeric checks look at.
template <typename T>
struct ForwardTrace {
    std::vector<Tensor<T>> attention;      // per layer, [B,H,T,T]
    std::vector<Tensor<T>> ln_normalized;  // two per layer, [B*T,d], pre gamma/beta
};

template <typename T>
ForwardResult<T> forward(const ParameterStore<T>& params, const ModelConfig& cfg,
                         const Batch& batch, RunMode mode = RunMode::Eval,
                         util::Rng* dropout_rng = nullptr,
                         ForwardTrace<T>* trace = nullptr);

// Mean cross-entropy over the batch; labels in {0,1}.
template <typename T>
T cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels);

template <typename T>
struct BackwardResult {
    ParameterStore<T> grads;
    T loss{};
    Tensor<T> logits;
    Tensor<T> probs;
};

// Exact reverse-mode gradients of the mean loss. With
// fine_tune_encoder=false the encoder/embedding gradients stay identically
// zero and the encoder backward pass is skipped entirely.
template <typename T>
BackwardResult<T> backward(const ParameterStore<T>& params, const ModelConfig& cfg,
                           const Batch& batch, const std::vector<int>& labels,
                           RunMode mode = RunMode::Train,
                           util::Rng* dropout_rng = nullptr);

#define PERMDET_EXTERN_MODEL(T)                                                        \
    extern template ForwardResult<T> forward<T>(const ParameterStore<T>&,             \
                                                const ModelConfig&, const Batch&,     \
                                                RunMode, util::Rng*, ForwardTrace<T>*); \
    extern template T cross_entropy<T>(const Tensor<T>&, const std::vector<int>&);    \
    extern template BackwardResult<T> backward<T>(const ParameterStore<T>&,           \
                                                  const ModelConfig&, const Batch&,   \
                                                  const std::vector<int>&, RunMode,   \
                                                  util::Rng*);
PERMDET_EXTERN_MODEL(float)
PERMDET_EXTERN_MODEL(double)
#undef PERMDET_EXTERN_MODEL

}  // namespace permdet::nn
