#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "permdet/nn/config.hpp"
#include "permdet/nn/tensor.hpp"

namespace permdet::nn {

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> value;
    bool encoder = false;   // part of embeddings/encoder (freezable)
    bool no_decay = false;  // bias or layer-norm parameter
};

// All model tensors in a fixed registration order (which is also the
// checkpoint order). Lookup by name is O(1).
template <typename T>
class ParameterStore {
public:
    ParameterStore() = default;

    // Truncated-normal(0.02) weights, zero biases, unit layer-norm scales.
    static ParameterStore init(const ModelConfig& cfg, uint64_t seed);
    // Same names/shapes, all zeros: gradient and optimizer-moment stores.
    static ParameterStore zeros_like(const ParameterStore& other);

    Tensor<T>& at(const std::string& name) {
        return tensors_[index_.at(name)].value;
    }
    const Tensor<T>& at(const std::string& name) const {
        return tensors_[index_.at(name)].value;
    }
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::vector<NamedTensor<T>>& tensors() { return tensors_; }
    const std::vector<NamedTensor<T>>& tensors() const { return tensors_; }
    size_t size() const { return tensors_.size(); }

    void add(std::string name, std::vector<size_t> shape, bool encoder, bool no_decay);

    template <typename U>
    ParameterStore<U> cast() const {
        ParameterStore<U> out;
        for (const auto& t : tensors_) {
            out.add(t.name, t.value.shape, t.encoder, t.no_decay);
            auto& dst = out.at(t.name);
            for (size_t i = 0; i < t.value.numel(); ++i)
                dst[i] = static_cast<U>(t.value[i]);
        }
        return out;
    }

private:
    std::vector<NamedTensor<T>> tensors_;
    std::unordered_map<std::string, size_t> index_;
};

// Registers every tensor the architecture needs, in checkpoint order.
template <typename T>
void register_model_tensors(ParameterStore<T>& store, const ModelConfig& cfg);

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template void register_model_tensors<float>(ParameterStore<float>&, const ModelConfig&);
extern template void register_model_tensors<double>(ParameterStore<double>&, const ModelConfig&);

}  // namespace permdet::nn
