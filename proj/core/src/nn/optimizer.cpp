#include "permdet/nn/optimizer.hpp"

#include <cmath>

namespace permdet::nn {

double lr_schedule(long long step, long long total_steps, double warmup_fraction,
                   double base_lr) {
    if (total_steps <= 0) return 0.0;
    if (step < 0) step = 0;
    if (step > total_steps) step = total_steps;
    auto warmup = static_cast<long long>(warmup_fraction * static_cast<double>(total_steps));
    if (step < warmup)
        return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (total_steps == warmup) return step < total_steps ? base_lr : 0.0;
    return base_lr * static_cast<double>(total_steps - step) /
           static_cast<double>(total_steps - warmup);
}

template <typename T>
void adamw_step(ParameterStore<T>& params, const ParameterStore<T>& grads,
                AdamWState<T>& state, const TrainConfig& cfg, double lr_t,
                const std::vector<bool>& trainable) {
    ++state.step;
    double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (size_t ti = 0; ti < params.size(); ++ti) {
        if (ti < trainable.size() && !trainable[ti]) continue;
        auto& pt = params.tensors()[ti];
        const auto& gt = grads.tensors()[ti].value;
        auto& mt = state.m.tensors()[ti].value;
        auto& vt = state.v.tensors()[ti].value;
        double wd = pt.no_decay ? 0.0 : cfg.weight_decay;

        for (size_t i = 0; i < pt.value.numel(); ++i) {
            double g = static_cast<double>(gt[i]);
            double m = b1 * static_cast<double>(mt[i]) + (1.0 - b1) * g;
            double v = b2 * static_cast<double>(vt[i]) + (1.0 - b2) * g * g;
            mt[i] = static_cast<T>(m);
            vt[i] = static_cast<T>(v);
            double m_hat = m / bc1;
            double v_hat = v / bc2;
            double p = static_cast<double>(pt.value[i]);
            p -= lr_t * (m_hat / (std::sqrt(v_hat) + cfg.adam_eps) + wd * p);
            pt.value[i] = static_cast<T>(p);
        }
    }
}

template <typename T>
void adamw_step(ParameterStore<T>& params, const ParameterStore<T>& grads,
                AdamWState<T>& state, const TrainConfig& cfg, double lr_t) {
    adamw_step(params, grads, state, cfg, lr_t,
               std::vector<bool>(params.size(), true));
}

std::vector<bool> trainable_mask_for(const ModelConfig& cfg, size_t n_tensors,
                                     const std::vector<bool>& encoder_flags) {
    std::vector<bool> mask(n_tensors, true);
    if (!cfg.fine_tune_encoder)
        for (size_t i = 0; i < n_tensors && i < encoder_flags.size(); ++i)
            if (encoder_flags[i]) mask[i] = false;
    return mask;
}

template struct AdamWState<float>;
template struct AdamWState<double>;
template void adamw_step<float>(ParameterStore<float>&, const ParameterStore<float>&,
                                AdamWState<float>&, const TrainConfig&, double,
                                const std::vector<bool>&);
template void adamw_step<double>(ParameterStore<double>&, const ParameterStore<double>&,
                                 AdamWState<double>&, const TrainConfig&, double,
                                 const std::vector<bool>&);
template void adamw_step<float>(ParameterStore<float>&, const ParameterStore<float>&,
                                AdamWState<float>&, const TrainConfig&, double);
template void adamw_step<double>(ParameterStore<double>&, const ParameterStore<double>&,
                                 AdamWState<double>&, const TrainConfig&, double);

}  // namespace permdet::nn
