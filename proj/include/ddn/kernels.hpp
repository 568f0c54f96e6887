#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace ddn::kernels {

// Low-level compute primitives, templated on the scalar type. The autodiff
// layer instantiates them with float; gradient-check oracles instantiate the
// same formulas with double so finite differences are evaluated far below the
// comparison tolerance. Reductions accumulate in double regardless of T.

/// C[m x n] = A[m x k] * B[k x n], row-major.
template <typename T>
void matmul_nn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
    std::fill(c, c + m * n, T(0));
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

/// Y[b x out] = X[b x in] * W[out x in]^T + bias[out].
template <typename T>
void linear_fwd(const T* x, const T* w, const T* bias, T* y,
                int64_t batch, int64_t in, int64_t out) {
    for (int64_t b = 0; b < batch; ++b) {
        const T* xrow = x + b * in;
        T* yrow = y + b * out;
        for (int64_t o = 0; o < out; ++o) {
            const T* wrow = w + o * in;
            double acc = static_cast<double>(bias[o]);
            for (int64_t i = 0; i < in; ++i) acc += static_cast<double>(xrow[i]) * static_cast<double>(wrow[i]);
            yrow[o] = static_cast<T>(acc);
        }
    }
}

/// Same-padded stride-1 cross-correlation.
/// X[b x cin x len], W[cout x cin x k] with odd k, Y[b x cout x len].
template <typename T>
void conv1d_fwd(const T* x, const T* w, const T* bias, T* y,
                int64_t batch, int64_t cin, int64_t cout, int64_t len, int64_t k) {
    const int64_t pad = (k - 1) / 2;
    for (int64_t b = 0; b < batch; ++b) {
        for (int64_t o = 0; o < cout; ++o) {
            T* yrow = y + (b * cout + o) * len;
            std::fill(yrow, yrow + len, bias[o]);
            for (int64_t i = 0; i < cin; ++i) {
                const T* xrow = x + (b * cin + i) * len;
                const T* wrow = w + (o * cin + i) * k;
                for (int64_t t = 0; t < k; ++t) {
                    const T wv = wrow[t];
                    const int64_t off = t - pad;
                    const int64_t lo = std::max<int64_t>(0, -off);
                    const int64_t hi = std::min<int64_t>(len, len - off);
                    const T* xs = xrow + off;
                    for (int64_t l = lo; l < hi; ++l) yrow[l] += wv * xs[l];
                }
            }
        }
    }
}

/// Nearest-neighbor upsampling along the innermost axis.
/// X viewed as [rows x len] -> Y[rows x len*factor].
template <typename T>
void upsample_fwd(const T* x, T* y, int64_t rows, int64_t len, int64_t factor) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* xrow = x + r * len;
        T* yrow = y + r * len * factor;
        for (int64_t l = 0; l < len; ++l) {
            const T v = xrow[l];
            for (int64_t f = 0; f < factor; ++f) yrow[l * factor + f] = v;
        }
    }
}

/// Per-channel mean and biased variance of X[b x c x len] over (b, len).
template <typename T>
void channel_stats(const T* x, int64_t batch, int64_t channels, int64_t len,
                   double* mean, double* var) {
    const double count = static_cast<double>(batch * len);
    for (int64_t c = 0; c < channels; ++c) {
        double s = 0.0;
        for (int64_t b = 0; b < batch; ++b) {
            const T* xrow = x + (b * channels + c) * len;
            for (int64_t l = 0; l < len; ++l) s += static_cast<double>(xrow[l]);
        }
        mean[c] = s / count;
        double sq = 0.0;
        for (int64_t b = 0; b < batch; ++b) {
            const T* xrow = x + (b * channels + c) * len;
            for (int64_t l = 0; l < len; ++l) {
                const double d = static_cast<double>(xrow[l]) - mean[c];
                sq += d * d;
            }
        }
        var[c] = sq / count;
    }
}

/// Y = gamma * (X - mean) / sqrt(var + eps) + beta, per channel.
template <typename T>
void batchnorm_apply(const T* x, T* y, int64_t batch, int64_t channels, int64_t len,
                     const double* mean, const double* var,
                     const T* gamma, const T* beta, double eps) {
    for (int64_t c = 0; c < channels; ++c) {
        const double inv_std = 1.0 / std::sqrt(var[c] + eps);
        const double g = static_cast<double>(gamma[c]) * inv_std;
        const double shift = static_cast<double>(beta[c]) - g * mean[c];
        for (int64_t b = 0; b < batch; ++b) {
            const T* xrow = x + (b * channels + c) * len;
            T* yrow = y + (b * channels + c) * len;
            for (int64_t l = 0; l < len; ++l)
                yrow[l] = static_cast<T>(g * static_cast<double>(xrow[l]) + shift);
        }
    }
}

/// Row-wise stable softmax over X[rows x n].
template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t n) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* xrow = x + r * n;
        T* yrow = y + r * n;
        double mx = static_cast<double>(xrow[0]);
        for (int64_t i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(xrow[i]));
        double sum = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const double e = std::exp(static_cast<double>(xrow[i]) - mx);
            yrow[i] = static_cast<T>(e);
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int64_t i = 0; i < n; ++i) yrow[i] = static_cast<T>(static_cast<double>(yrow[i]) * inv);
    }
}

template <typename T>
T tanh_scalar(T v) {
    return std::tanh(v);
}

template <typename T>
T leaky_relu_scalar(T v, T slope) {
    return v >= T(0) ? v : slope * v;
}

/// Numerically stable log(1 + exp(v)).
template <typename T>
T softplus_scalar(T v) {
    if (v > T(20)) return v;
    if (v < T(-20)) return std::exp(v);
    return std::log1p(std::exp(v));
}

template <typename T>
T sigmoid_scalar(T v) {
    if (v >= T(0)) {
        const T e = std::exp(-v);
        return T(1) / (T(1) + e);
    }
    const T e = std::exp(v);
    return e / (T(1) + e);
}

}  // namespace ddn::kernels
