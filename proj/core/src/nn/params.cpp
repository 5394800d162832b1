#include "permdet/nn/params.hpp"

#include "permdet/util/rng.hpp"

namespace permdet::nn {

template <typename T>
void ParameterStore<T>::add(std::string name, std::vector<size_t> shape,
                            bool encoder, bool no_decay) {
    index_.emplace(name, tensors_.size());
    tensors_.push_back(NamedTensor<T>{std::move(name), Tensor<T>(std::move(shape)),
                                      encoder, no_decay});
}

template <typename T>
void register_model_tensors(ParameterStore<T>& store, const ModelConfig& cfg) {
    auto V = static_cast<size_t>(cfg.vocab_size);
    auto d = static_cast<size_t>(cfg.d_model);
    auto L = static_cast<size_t>(cfg.max_len);
    auto f = static_cast<size_t>(cfg.d_ff);
    auto h = static_cast<size_t>(cfg.head_hidden);
    auto c = static_cast<size_t>(cfg.n_classes);

    store.add("embed.token", {V, d}, true, false);
    store.add("embed.pos", {L, d}, true, false);
    for (int i = 0; i < cfg.n_layers; ++i) {
        std::string p = "enc." + std::to_string(i) + ".";
        store.add(p + "attn.wq", {d, d}, true, false);
        store.add(p + "attn.bq", {d}, true, true);
        store.add(p + "attn.wk", {d, d}, true, false);
        store.add(p + "attn.bk", {d}, true, true);
        store.add(p + "attn.wv", {d, d}, true, false);
        store.add(p + "attn.bv", {d}, true, true);
        store.add(p + "attn.wo", {d, d}, true, false);
        store.add(p + "attn.bo", {d}, true, true);
        store.add(p + "attn_norm.gamma", {d}, true, true);
        store.add(p + "attn_norm.beta", {d}, true, true);
        store.add(p + "ffn.w1", {d, f}, true, false);
        store.add(p + "ffn.b1", {f}, true, true);
        store.add(p + "ffn.w2", {f, d}, true, false);
        store.add(p + "ffn.b2", {d}, true, true);
        store.add(p + "ffn_norm.gamma", {d}, true, true);
        store.add(p + "ffn_norm.beta", {d}, true, true);
    }
    store.add("pooler.w", {d, d}, false, false);
    store.add("pooler.b", {d}, false, true);
    store.add("head.w1", {d, h}, false, false);
    store.add("head.b1", {h}, false, true);
    store.add("head.w2", {h, c}, false, false);
    store.add("head.b2", {c}, false, true);
}

template <typename T>
ParameterStore<T> ParameterStore<T>::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ParameterStore<T> store;
    register_model_tensors(store, cfg);
    util::Rng rng(seed);
    for (auto& t : store.tensors_) {
        bool is_norm_scale = t.name.ends_with("norm.gamma");
        if (is_norm_scale) {
            t.value.fill(T{1});
        } else if (t.value.shape.size() == 1) {
            t.value.fill(T{0});  // biases and norm shifts
        } else {
            for (auto& v : t.value.data)
                v = static_cast<T>(rng.truncated_normal(0.02));
        }
    }
    return store;
}

template <typename T>
ParameterStore<T> ParameterStore<T>::zeros_like(const ParameterStore<T>& other) {
    ParameterStore<T> store;
    for (const auto& t : other.tensors_)
        store.add(t.name, t.value.shape, t.encoder, t.no_decay);
    return store;
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template void register_model_tensors<float>(ParameterStore<float>&, const ModelConfig&);
template void register_model_tensors<double>(ParameterStore<double>&, const ModelConfig&);

}  // namespace permdet::nn
