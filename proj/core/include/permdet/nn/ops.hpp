#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>

namespace permdet::nn::ops {

// C[m,n] = A[m,k] * B[k,n], += when accumulate. ikj order keeps B and C
// accesses sequential.
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, size_t m, size_t k, size_t n,
             bool accumulate = false) {
    if (!accumulate)
        for (size_t i = 0; i < m * n; ++i) C[i] = T{0};
    for (size_t i = 0; i < m; ++i) {
        const T* a_row = A + i * k;
        T* c_row = C + i * n;
        for (size_t l = 0; l < k; ++l) {
            T a = a_row[l];
            if (a == T{0}) continue;
            const T* b_row = B + l * n;
            for (size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// C[m,n] = A[k,m]^T * B[k,n]  (outer-product accumulation over k)
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, size_t m, size_t k, size_t n,
             bool accumulate = false) {
    if (!accumulate)
        for (size_t i = 0; i < m * n; ++i) C[i] = T{0};
    for (size_t l = 0; l < k; ++l) {
        const T* a_row = A + l * m;
        const T* b_row = B + l * n;
        for (size_t i = 0; i < m; ++i) {
            T a = a_row[i];
            if (a == T{0}) continue;
            T* c_row = C + i * n;
            for (size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// C[m,n] = A[m,k] * B[n,k]^T  (row-dot-row)
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, size_t m, size_t k, size_t n,
             bool accumulate = false) {
    for (size_t i = 0; i < m; ++i) {
        const T* a_row = A + i * k;
        for (size_t j = 0; j < n; ++j) {
            const T* b_row = B + j * k;
            T acc{0};
            for (size_t l = 0; l < k; ++l) acc += a_row[l] * b_row[l];
            T& c = C[i * n + j];
            c = accumulate ? c + acc : acc;
        }
    }
}

template <typename T>
void add_bias_rows(T* X, const T* b, size_t rows, size_t n) {
    for (size_t i = 0; i < rows; ++i) {
        T* row = X + i * n;
        for (size_t j = 0; j < n; ++j) row[j] += b[j];
    }
}

template <typename T>
void accumulate_bias_grad(const T* dY, T* db, size_t rows, size_t n) {
    for (size_t i = 0; i < rows; ++i) {
        const T* row = dY + i * n;
        for (size_t j = 0; j < n; ++j) db[j] += row[j];
    }
}

inline constexpr double kLayerNormEps = 1e-12;

// Normalizes x over the last axis; writes gamma*y + beta to out and keeps y
// and 1/sqrt(var+eps) for the backward pass.
template <typename T>
void layernorm_forward(const T* x, const T* gamma, const T* beta, size_t rows,
                       size_t d, T* out, T* y_cache, T* inv_std_cache) {
    for (size_t i = 0; i < rows; ++i) {
        const T* xi = x + i * d;
        T mean{0};
        for (size_t j = 0; j < d; ++j) mean += xi[j];
        mean /= static_cast<T>(d);
        T var{0};
        for (size_t j = 0; j < d; ++j) {
            T c = xi[j] - mean;
            var += c * c;
        }
        var /= static_cast<T>(d);
        T inv = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
        inv_std_cache[i] = inv;
        T* yi = y_cache + i * d;
        T* oi = out + i * d;
        for (size_t j = 0; j < d; ++j) {
            yi[j] = (xi[j] - mean) * inv;
            oi[j] = gamma[j] * yi[j] + beta[j];
        }
    }
}

// dx = inv * (dy - mean(dy) - y * mean(dy .* y)), dy = dout .* gamma.
// Gradients for gamma/beta accumulate.
template <typename T>
void layernorm_backward(const T* dout, const T* y, const T* inv_std, const T* gamma,
                        size_t rows, size_t d, T* dx, T* dgamma, T* dbeta) {
    for (size_t i = 0; i < rows; ++i) {
        const T* doi = dout + i * d;
        const T* yi = y + i * d;
        T mean_dy{0}, mean_dyy{0};
        for (size_t j = 0; j < d; ++j) {
            T dy = doi[j] * gamma[j];
            mean_dy += dy;
            mean_dyy += dy * yi[j];
            dgamma[j] += doi[j] * yi[j];
            dbeta[j] += doi[j];
        }
        mean_dy /= static_cast<T>(d);
        mean_dyy /= static_cast<T>(d);
        T inv = inv_std[i];
        T* dxi = dx + i * d;
        for (size_t j = 0; j < d; ++j) {
            T dy = doi[j] * gamma[j];
            dxi[j] = inv * (dy - mean_dy - yi[j] * mean_dyy);
        }
    }
}

// Softmax over the valid subset of a row; invalid positions get exactly 0.
template <typename T>
void masked_softmax_row(const T* scores, const int* valid, size_t n, T* probs) {
    T max_v = -std::numeric_limits<T>::infinity();
    for (size_t j = 0; j < n; ++j)
        if (valid[j] && scores[j] > max_v) max_v = scores[j];
    T sum{0};
    for (size_t j = 0; j < n; ++j) {
        if (valid[j]) {
            probs[j] = std::exp(scores[j] - max_v);
            sum += probs[j];
        } else {
            probs[j] = T{0};
        }
    }
    for (size_t j = 0; j < n; ++j) probs[j] /= sum;
}

// ds_j = p_j * (dp_j - sum_k p_k dp_k); zero where p_j = 0.
template <typename T>
void softmax_row_backward(const T* probs, const T* dprobs, size_t n, T* dscores) {
    T dot{0};
    for (size_t j = 0; j < n; ++j) dot += probs[j] * dprobs[j];
    for (size_t j = 0; j < n; ++j) dscores[j] = probs[j] * (dprobs[j] - dot);
}

// Exact GELU: 0.5 x (1 + erf(x / sqrt(2))).
template <typename T>
T gelu(T x) {
    return static_cast<T>(0.5) * x *
           (T{1} + std::erf(x / static_cast<T>(std::numbers::sqrt2)));
}

template <typename T>
T gelu_grad(T x) {
    T phi_cdf = static_cast<T>(0.5) *
                (T{1} + std::erf(x / static_cast<T>(std::numbers::sqrt2)));
    T phi_pdf = std::exp(static_cast<T>(-0.5) * x * x) /
                static_cast<T>(std::sqrt(2.0 * std::numbers::pi));
    return phi_cdf + x * phi_pdf;
}

}  // namespace permdet::nn::ops
