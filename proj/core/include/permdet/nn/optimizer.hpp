#pragma once

#include "permdet/nn/params.hpp"

namespace permdet::nn {

// Linear 0 -> base_lr over the warmup steps, then linear base_lr -> 0 over
// the remainder.
double lr_schedule(long long step, long long total_steps, double warmup_fraction,
                   double base_lr);

template <typename T>
struct AdamWState {
    ParameterStore<T> m;
    ParameterStore<T> v;
    long long step = 0;

    static AdamWState init(const ParameterStore<T>& params) {
        return AdamWState{ParameterStore<T>::zeros_like(params),
                          ParameterStore<T>::zeros_like(params), 0};
    }
};

// Decoupled weight decay: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
// Decay is skipped for tensors flagged no_decay (biases, layer norms).
// Only tensors selected by `trainable` are touched; frozen tensors keep
// their bytes and their optimizer state untouched.
template <typename T>
void adamw_step(ParameterStore<T>& params, const ParameterStore<T>& grads,
                AdamWState<T>& state, const TrainConfig& cfg, double lr_t,
                const std::vector<bool>& trainable);

// Convenience: every tensor trainable.
template <typename T>
void adamw_step(ParameterStore<T>& params, const ParameterStore<T>& grads,
                AdamWState<T>& state, const TrainConfig& cfg, double lr_t);

// Trainability per tensor given the freeze flag.
std::vector<bool> trainable_mask_for(const ModelConfig& cfg, size_t n_tensors,
                                     const std::vector<bool>& encoder_flags);

template <typename T>
std::vector<bool> trainable_mask(const ModelConfig& cfg,
                                 const ParameterStore<T>& params) {
    std::vector<bool> enc(params.size());
    for (size_t i = 0; i < params.size(); ++i) enc[i] = params.tensors()[i].encoder;
    return trainable_mask_for(cfg, params.size(), enc);
}

extern template struct AdamWState<float>;
extern template struct AdamWState<double>;
extern template void adamw_step<float>(ParameterStore<float>&, const ParameterStore<float>&,
                                       AdamWState<float>&, const TrainConfig&, double,
                                       const std::vector<bool>&);
extern template void adamw_step<double>(ParameterStore<double>&, const ParameterStore<double>&,
                                        AdamWState<double>&, const TrainConfig&, double,
                                        const std::vector<bool>&);
extern template void adamw_step<float>(ParameterStore<float>&, const ParameterStore<float>&,
                                       AdamWState<float>&, const TrainConfig&, double);
extern template void adamw_step<double>(ParameterStore<double>&, const ParameterStore<double>&,
                                        AdamWState<double>&, const TrainConfig&, double);

}  // namespace permdet::nn
