#pragma once

// Encoder internals shared by the classifier backward pass and the
// masked-token pretraining objective. Most callers want model.hpp instead.

#include "permdet/nn/model.hpp"

namespace permdet::nn {

// Everything the encoder backward pass needs from the forward pass.
template <typename T>
struct LayerCache {
    Tensor<T> h_in;          // [B,T,d] input to the layer
    Tensor<T> q, k, v;       // [B,T,d]
    Tensor<T> attn;          // [B,H,T,T] softmax probabilities
    Tensor<T> ctx;           // [B,T,d] concatenated head outputs
    Tensor<T> attn_drop;     // [B,T,d] dropout scale factors (empty if unused)
    Tensor<T> ln1_y;         // [B*T,d] normalized pre-scale
    Tensor<T> ln1_inv;       // [B*T]
    Tensor<T> h_mid;         // [B,T,d] after first add&norm
    Tensor<T> ffn_pre;       // [B,T,f] pre-GELU
    Tensor<T> ffn_act;       // [B,T,f] post-GELU
    Tensor<T> ffn_drop;      // [B,T,d]
    Tensor<T> ln2_y;         // [B*T,d]
    Tensor<T> ln2_inv;       // [B*T]
};

template <typename T>
struct EncoderCache {
    Tensor<T> embedded;      // [B,T,d] post-dropout embedding sum
    Tensor<T> embed_drop;    // [B,T,d]
    std::vector<LayerCache<T>> layers;
};

template <typename T>
Tensor<T> encoder_forward(const ParameterStore<T>& params, const ModelConfig& cfg,
                          const Batch& batch, RunMode mode, util::Rng* dropout_rng,
                          EncoderCache<T>* cache, ForwardTrace<T>* trace);

// Accumulates encoder/embedding gradients into `grads` given the gradient of
// the loss w.r.t. the final hidden states.
template <typename T>
void encoder_backward(const ParameterStore<T>& params, const ModelConfig& cfg,
                      const Batch& batch, const EncoderCache<T>& cache,
                      const Tensor<T>& dhidden, ParameterStore<T>& grads);

#define PERMDET_EXTERN_ENCODER(T)                                                   \
    extern template Tensor<T> encoder_forward<T>(                                   \
        const ParameterStore<T>&, const ModelConfig&, const Batch&, RunMode,        \
        util::Rng*, EncoderCache<T>*, ForwardTrace<T>*);                            \
    extern template void encoder_backward<T>(                                       \
        const ParameterStore<T>&, const ModelConfig&, const Batch&,                 \
        const EncoderCache<T>&, const Tensor<T>&, ParameterStore<T>&);
PERMDET_EXTERN_ENCODER(float)
PERMDET_EXTERN_ENCODER(double)
#undef PERMDET_EXTERN_ENCODER

}  // namespace permdet::nn
