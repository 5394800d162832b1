#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace permdet::nn {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteActivation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major tensor. Just storage plus shape; the model code indexes
// explicitly.
template <typename T>
struct Tensor {
    std::vector<size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s)
        : shape(std::move(s)), data(numel_of(shape), T{0}) {}

    static size_t numel_of(const std::vector<size_t>& s) {
        return std::accumulate(s.begin(), s.end(), size_t{1},
                               [](size_t a, size_t b) { return a * b; });
    }

    size_t numel() const { return data.size(); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    T& operator[](size_t i) { return data[i]; }
    const T& operator[](size_t i) const { return data[i]; }
};

}  // namespace permdet::nn
