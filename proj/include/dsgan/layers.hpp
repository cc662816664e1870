#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgan/tensor.hpp"

namespace dsgan {

// Forward/backward pairs for the few layers the encoder needs. Each
// forward returns a small cache struct so backward can route gradients
// without recomputation.

// ---- embedding lookup -----------------------------------------------------

// rows of `table` gathered by index; duplicates sum on backward
inline Tensor embedding_lookup(const Tensor& table,
                               const std::vector<std::size_t>& indices) {
    const std::size_t v = table.rows();
    const std::size_t d = table.cols();
    Tensor out({indices.size(), d});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= v)
            throw std::out_of_range("embedding index " + std::to_string(indices[i]) +
                                    " out of range [0," + std::to_string(v) + ")");
        const double* src = table.row(indices[i]);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
    return out;
}

inline void embedding_lookup_backward(Tensor& table_grad,
                                      const std::vector<std::size_t>& indices,
                                      const Tensor& out_grad) {
    const std::size_t d = table_grad.cols();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        double* dst = table_grad.row(indices[i]);
        const double* src = out_grad.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
}

// ---- windowed convolution + max-over-time pool + tanh ---------------------

struct ConvPoolCache {
    std::vector<std::size_t> argmax;  // winning window start (padded coords) per kernel
    std::vector<double> activation;   // tanh output per kernel
};

// input [n x d_in], kernels [c_k x (window*d_in)], bias [c_k].
// Zero padding of floor(window/2) rows at each end gives one window per
// token position; output[k] = tanh(max_t kernels[k].window_t + bias[k]).
inline Tensor conv1d_maxpool(const Tensor& input, const Tensor& kernels,
                             const Tensor& bias, std::size_t window,
                             ConvPoolCache* cache = nullptr) {
    const std::size_t n = input.rows();
    const std::size_t d_in = input.cols();
    const std::size_t c_k = kernels.rows();
    if (n < 1) throw std::invalid_argument("conv1d_maxpool: empty input");
    if (kernels.cols() != window * d_in)
        throw std::invalid_argument("conv1d_maxpool: kernel width " +
                                    std::to_string(kernels.cols()) + " != window*d_in " +
                                    std::to_string(window * d_in));

    const std::size_t pad = window / 2;
    // padded sequence has rows [-pad, n+pad); window t covers padded rows
    // [t, t+window), t = 0..n-1
    Tensor out({c_k});
    if (cache) {
        cache->argmax.assign(c_k, 0);
        cache->activation.assign(c_k, 0.0);
    }
    for (std::size_t k = 0; k < c_k; ++k) {
        const double* w = kernels.row(k);
        double best = -1e300;
        std::size_t best_t = 0;
        for (std::size_t t = 0; t < n; ++t) {
            double acc = 0.0;
            for (std::size_t r = 0; r < window; ++r) {
                // padded row index t+r maps to input row t+r-pad
                std::int64_t src = static_cast<std::int64_t>(t + r) -
                                   static_cast<std::int64_t>(pad);
                if (src < 0 || src >= static_cast<std::int64_t>(n)) continue;
                const double* x = input.row(static_cast<std::size_t>(src));
                const double* wr = w + r * d_in;
                for (std::size_t j = 0; j < d_in; ++j) acc += wr[j] * x[j];
            }
            if (acc > best) {  // strict: ties keep the smallest t
                best = acc;
                best_t = t;
            }
        }
        double a = std::tanh(best + bias.data[k]);
        out.data[k] = a;
        if (cache) {
            cache->argmax[k] = best_t;
            cache->activation[k] = a;
        }
    }
    return out;
}

// Routes each kernel's gradient through tanh to its argmax window only.
inline void conv1d_maxpool_backward(const Tensor& input, const Tensor& kernels,
                                    std::size_t window, const ConvPoolCache& cache,
                                    const Tensor& out_grad, Tensor& input_grad,
                                    Tensor& kernels_grad, Tensor& bias_grad) {
    const std::size_t n = input.rows();
    const std::size_t d_in = input.cols();
    const std::size_t c_k = kernels.rows();
    const std::size_t pad = window / 2;
    for (std::size_t k = 0; k < c_k; ++k) {
        double a = cache.activation[k];
        double g = out_grad.data[k] * (1.0 - a * a);  // through tanh
        if (g == 0.0) continue;
        bias_grad.data[k] += g;
        const std::size_t t = cache.argmax[k];
        const double* w = kernels.row(k);
        double* wg = kernels_grad.row(k);
        for (std::size_t r = 0; r < window; ++r) {
            std::int64_t src = static_cast<std::int64_t>(t + r) -
                               static_cast<std::int64_t>(pad);
            if (src < 0 || src >= static_cast<std::int64_t>(n)) continue;
            const double* x = input.row(static_cast<std::size_t>(src));
            double* xg = input_grad.row(static_cast<std::size_t>(src));
            const double* wr = w + r * d_in;
            double* wgr = wg + r * d_in;
            for (std::size_t j = 0; j < d_in; ++j) {
                wgr[j] += g * x[j];
                xg[j] += g * wr[j];
            }
        }
    }
}

// ---- affine + sigmoid -----------------------------------------------------

struct AffineSigmoidCache {
    double logit = 0.0;
    double prob = 0.5;
};

inline double affine_sigmoid(const Tensor& x, const Tensor& w, double b,
                             AffineSigmoidCache* cache = nullptr) {
    if (x.data.size() != w.data.size())
        throw std::invalid_argument("affine_sigmoid: dimension mismatch");
    double z = b;
    for (std::size_t i = 0; i < x.data.size(); ++i) z += x.data[i] * w.data[i];
    double p = 1.0 / (1.0 + std::exp(-z));
    if (cache) {
        cache->logit = z;
        cache->prob = p;
    }
    return p;
}

// d_logit is dL/dz; gradients for x, w, b are accumulated.
inline void affine_sigmoid_backward(const Tensor& x, const Tensor& w,
                                    double d_logit, Tensor& x_grad,
                                    Tensor& w_grad, double& b_grad) {
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        x_grad.data[i] += d_logit * w.data[i];
        w_grad.data[i] += d_logit * x.data[i];
    }
    b_grad += d_logit;
}

// ---- binary cross-entropy -------------------------------------------------

inline constexpr double kLogClampEps = 1e-12;

struct BceResult {
    double loss;
    double d_logit;  // dL/dz for p = sigmoid(z): p - y
};

inline BceResult bce_loss(double p, int y) {
    double pc = p;
    if (pc < kLogClampEps) pc = kLogClampEps;
    if (pc > 1.0 - kLogClampEps) pc = 1.0 - kLogClampEps;
    double loss = y ? -std::log(pc) : -std::log(1.0 - pc);
    return {loss, p - static_cast<double>(y)};
}

}  // namespace dsgan
