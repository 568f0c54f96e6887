#include "ddn/ops.hpp"

#include <cmath>
#include <cstring>

#include "ddn/kernels.hpp"

namespace ddn {

namespace {

using detail::TensorNode;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
}

// 8-lane dot product: vectorizable without float reassociation, and the
// summation order is fixed, so results are bit-stable run to run.
float dot_f(const float* a, const float* b, int64_t n) {
    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
    float tail = 0.0f;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
           ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<float> out(a.values().begin(), a.values().end());
    for (size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
    TensorNode* pa = a.node_ptr().get();
    TensorNode* pb = b.node_ptr().get();
    return make_op_result(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode& n) {
        if (pa->requires_grad)
            for (size_t i = 0; i < n.scratch.size(); ++i) pa->scratch[i] += n.scratch[i];
        if (pb->requires_grad)
            for (size_t i = 0; i < n.scratch.size(); ++i) pb->scratch[i] += n.scratch[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<float> out(a.values().begin(), a.values().end());
    for (size_t i = 0; i < out.size(); ++i) out[i] -= b.values()[i];
    TensorNode* pa = a.node_ptr().get();
    TensorNode* pb = b.node_ptr().get();
    return make_op_result(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode& n) {
        if (pa->requires_grad)
            for (size_t i = 0; i < n.scratch.size(); ++i) pa->scratch[i] += n.scratch[i];
        if (pb->requires_grad)
            for (size_t i = 0; i < n.scratch.size(); ++i) pb->scratch[i] -= n.scratch[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<float> out(a.values().begin(), a.values().end());
    for (size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
    TensorNode* pa = a.node_ptr().get();
    TensorNode* pb = b.node_ptr().get();
    return make_op_result(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode& n) {
        if (pa->requires_grad)
            for (size_t i = 0; i < n.scratch.size(); ++i)
                pa->scratch[i] += n.scratch[i] * pb->values[i];
        if (pb->requires_grad)
            for (size_t i = 0; i < n.scratch.size(); ++i)
                pb->scratch[i] += n.scratch[i] * pa->values[i];
    });
}

Tensor scale(const Tensor& t, float s) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v *= s;
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p, s](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i) p->scratch[i] += s * n.scratch[i];
    });
}

Tensor add_scalar(const Tensor& t, float s) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v += s;
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i) p->scratch[i] += n.scratch[i];
    });
}

Tensor square(const Tensor& t) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v *= v;
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i)
            p->scratch[i] += 2.0f * p->values[i] * n.scratch[i];
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ConfigError("matmul: expected 2-D operands, got " + shape_str(a.shape()) +
                          " and " + shape_str(b.shape()));
    const int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
        throw ConfigError("matmul: inner extents differ, " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    std::vector<float> out(static_cast<size_t>(m * n));
    kernels::matmul_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
    TensorNode* pa = a.node_ptr().get();
    TensorNode* pb = b.node_ptr().get();
    return make_op_result({m, n}, std::move(out), {a, b}, [pa, pb, m, k, n](TensorNode& node) {
        const float* g = node.scratch.data();
        if (pa->requires_grad) {
            // dA = dC * B^T
            for (int64_t i = 0; i < m; ++i)
                for (int64_t p = 0; p < k; ++p)
                    pa->scratch[i * k + p] += dot_f(g + i * n, pb->values.data() + p * n, n);
        }
        if (pb->requires_grad) {
            // dB = A^T * dC
            for (int64_t i = 0; i < m; ++i) {
                const float* arow = pa->values.data() + i * k;
                const float* grow = g + i * n;
                for (int64_t p = 0; p < k; ++p) {
                    const float av = arow[p];
                    float* dst = pb->scratch.data() + p * n;
                    for (int64_t j = 0; j < n; ++j) dst[j] += av * grow[j];
                }
            }
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
        throw ConfigError("linear: expected x[B x in], w[out x in], b[out]");
    const int64_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
    if (w.dim(1) != in || b.dim(0) != out)
        throw ConfigError("linear: shape mismatch x" + shape_str(x.shape()) + " w" +
                          shape_str(w.shape()) + " b" + shape_str(b.shape()));
    std::vector<float> y(static_cast<size_t>(batch * out));
    kernels::linear_fwd(x.values().data(), w.values().data(), b.values().data(), y.data(),
                        batch, in, out);
    TensorNode* px = x.node_ptr().get();
    TensorNode* pw = w.node_ptr().get();
    TensorNode* pb = b.node_ptr().get();
    return make_op_result({batch, out}, std::move(y), {x, w, b},
                          [px, pw, pb, batch, in, out](TensorNode& node) {
        const float* g = node.scratch.data();
        if (px->requires_grad) {
            // dx[b,i] = sum_o g[b,o] * w[o,i]
            for (int64_t bi = 0; bi < batch; ++bi) {
                const float* grow = g + bi * out;
                float* dst = px->scratch.data() + bi * in;
                for (int64_t o = 0; o < out; ++o) {
                    const float gv = grow[o];
                    const float* wrow = pw->values.data() + o * in;
                    for (int64_t i = 0; i < in; ++i) dst[i] += gv * wrow[i];
                }
            }
        }
        if (pw->requires_grad) {
            // dw[o,i] = sum_b g[b,o] * x[b,i]
            for (int64_t bi = 0; bi < batch; ++bi) {
                const float* grow = g + bi * out;
                const float* xrow = px->values.data() + bi * in;
                for (int64_t o = 0; o < out; ++o) {
                    const float gv = grow[o];
                    float* dst = pw->scratch.data() + o * in;
                    for (int64_t i = 0; i < in; ++i) dst[i] += gv * xrow[i];
                }
            }
        }
        if (pb->requires_grad) {
            for (int64_t bi = 0; bi < batch; ++bi)
                for (int64_t o = 0; o < out; ++o) pb->scratch[o] += g[bi * out + o];
        }
    });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
    const bool batched = x.rank() == 3;
    if (!batched && x.rank() != 2)
        throw ConfigError("conv1d: input must be [B x Cin x L] or [Cin x L]");
    if (w.rank() != 3 || b.rank() != 1) throw ConfigError("conv1d: weight must be [Cout x Cin x k]");
    const int64_t batch = batched ? x.dim(0) : 1;
    const int64_t cin = batched ? x.dim(1) : x.dim(0);
    const int64_t len = batched ? x.dim(2) : x.dim(1);
    const int64_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin)
        throw ConfigError("conv1d: weight input channels " + std::to_string(w.dim(1)) +
                          " do not match input " + std::to_string(cin));
    if (b.dim(0) != cout) throw ConfigError("conv1d: bias length does not match output channels");
    if (k % 2 == 0) throw ConfigError("conv1d: kernel width must be odd for same padding");
    const int64_t pad = (k - 1) / 2;

    std::vector<float> y(static_cast<size_t>(batch * cout * len));
    kernels::conv1d_fwd(x.values().data(), w.values().data(), b.values().data(), y.data(),
                        batch, cin, cout, len, k);
    std::vector<int64_t> out_shape =
        batched ? std::vector<int64_t>{batch, cout, len} : std::vector<int64_t>{cout, len};

    TensorNode* px = x.node_ptr().get();
    TensorNode* pw = w.node_ptr().get();
    TensorNode* pb = b.node_ptr().get();
    return make_op_result(std::move(out_shape), std::move(y), {x, w, b},
                          [px, pw, pb, batch, cin, cout, len, k, pad](TensorNode& node) {
        const float* g = node.scratch.data();
        if (px->requires_grad) {
            for (int64_t bi = 0; bi < batch; ++bi) {
                for (int64_t o = 0; o < cout; ++o) {
                    const float* grow = g + (bi * cout + o) * len;
                    for (int64_t i = 0; i < cin; ++i) {
                        float* dxrow = px->scratch.data() + (bi * cin + i) * len;
                        const float* wrow = pw->values.data() + (o * cin + i) * k;
                        for (int64_t t = 0; t < k; ++t) {
                            const float wv = wrow[t];
                            const int64_t off = t - pad;
                            const int64_t lo = std::max<int64_t>(0, -off);
                            const int64_t hi = std::min<int64_t>(len, len - off);
                            float* dst = dxrow + off;
                            for (int64_t l = lo; l < hi; ++l) dst[l] += wv * grow[l];
                        }
                    }
                }
            }
        }
        if (pw->requires_grad) {
            for (int64_t bi = 0; bi < batch; ++bi) {
                for (int64_t o = 0; o < cout; ++o) {
                    const float* grow = g + (bi * cout + o) * len;
                    for (int64_t i = 0; i < cin; ++i) {
                        const float* xrow = px->values.data() + (bi * cin + i) * len;
                        float* dwrow = pw->scratch.data() + (o * cin + i) * k;
                        for (int64_t t = 0; t < k; ++t) {
                            const int64_t off = t - pad;
                            const int64_t lo = std::max<int64_t>(0, -off);
                            const int64_t hi = std::min<int64_t>(len, len - off);
                            dwrow[t] += dot_f(grow + lo, xrow + lo + off, hi - lo);
                        }
                    }
                }
            }
        }
        if (pb->requires_grad) {
            for (int64_t bi = 0; bi < batch; ++bi)
                for (int64_t o = 0; o < cout; ++o) {
                    const float* grow = g + (bi * cout + o) * len;
                    float s = 0.0f;
                    for (int64_t l = 0; l < len; ++l) s += grow[l];
                    pb->scratch[o] += s;
                }
        }
    });
}

Tensor upsample_nearest(const Tensor& x, int64_t factor) {
    if (factor < 1) throw ConfigError("upsample_nearest: factor must be >= 1");
    if (x.rank() != 2 && x.rank() != 3)
        throw ConfigError("upsample_nearest: input must be [C x L] or [B x C x L]");
    const int64_t len = x.dim(x.rank() - 1);
    const int64_t rows = x.size() / len;
    std::vector<float> y(static_cast<size_t>(rows * len * factor));
    kernels::upsample_fwd(x.values().data(), y.data(), rows, len, factor);
    std::vector<int64_t> out_shape = x.shape();
    out_shape.back() *= factor;
    TensorNode* p = x.node_ptr().get();
    return make_op_result(std::move(out_shape), std::move(y), {x},
                          [p, rows, len, factor](TensorNode& node) {
        // Gradient of each source element is the sum over its repeats.
        for (int64_t r = 0; r < rows; ++r) {
            const float* grow = node.scratch.data() + r * len * factor;
            float* dst = p->scratch.data() + r * len;
            for (int64_t l = 0; l < len; ++l) {
                float s = 0.0f;
                for (int64_t f = 0; f < factor; ++f) s += grow[l * factor + f];
                dst[l] += s;
            }
        }
    });
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   std::vector<float>& running_mean, std::vector<float>& running_var,
                   bool training, float momentum, float eps) {
    if (x.rank() != 2 && x.rank() != 3)
        throw ConfigError("batchnorm1d: input must be [B x F] or [B x C x L]");
    const int64_t batch = x.dim(0);
    const int64_t channels = x.dim(1);
    const int64_t len = x.rank() == 3 ? x.dim(2) : 1;
    if (gamma.size() != channels || beta.size() != channels ||
        static_cast<int64_t>(running_mean.size()) != channels ||
        static_cast<int64_t>(running_var.size()) != channels)
        throw ConfigError("batchnorm1d: parameter length does not match channel count");
    if (training && batch < 2)
        throw ConfigError("batchnorm1d: train mode needs a batch of at least 2");

    std::vector<double> mean(channels), var(channels);
    if (training) {
        kernels::channel_stats(x.values().data(), batch, channels, len, mean.data(), var.data());
        const double m = static_cast<double>(batch * len);
        const double unbias = m > 1.0 ? m / (m - 1.0) : 1.0;
        for (int64_t c = 0; c < channels; ++c) {
            running_mean[c] = static_cast<float>((1.0 - momentum) * running_mean[c] + momentum * mean[c]);
            running_var[c] =
                static_cast<float>((1.0 - momentum) * running_var[c] + momentum * var[c] * unbias);
        }
    } else {
        for (int64_t c = 0; c < channels; ++c) {
            mean[c] = running_mean[c];
            var[c] = running_var[c];
        }
    }

    std::vector<float> y(static_cast<size_t>(batch * channels * len));
    kernels::batchnorm_apply(x.values().data(), y.data(), batch, channels, len, mean.data(),
                             var.data(), gamma.values().data(), beta.values().data(),
                             static_cast<double>(eps));

    std::vector<double> inv_std(channels);
    for (int64_t c = 0; c < channels; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);

    TensorNode* px = x.node_ptr().get();
    TensorNode* pg = gamma.node_ptr().get();
    TensorNode* pbt = beta.node_ptr().get();
    auto backward = [px, pg, pbt, batch, channels, len, training, mean = std::move(mean),
                     inv_std = std::move(inv_std)](TensorNode& node) {
        const float* g = node.scratch.data();
        const int64_t m = batch * len;
        for (int64_t c = 0; c < channels; ++c) {
            const float gm = pg->values[c];
            double s1 = 0.0, s2 = 0.0;  // sum(dy), sum(dy * xhat)
            for (int64_t b = 0; b < batch; ++b) {
                const float* grow = g + (b * channels + c) * len;
                const float* xrow = px->values.data() + (b * channels + c) * len;
                for (int64_t l = 0; l < len; ++l) {
                    const double xhat = (xrow[l] - mean[c]) * inv_std[c];
                    s1 += grow[l];
                    s2 += grow[l] * xhat;
                }
            }
            if (pg->requires_grad) pg->scratch[c] += static_cast<float>(s2);
            if (pbt->requires_grad) pbt->scratch[c] += static_cast<float>(s1);
            if (px->requires_grad) {
                if (training) {
                    const double k1 = s1 / static_cast<double>(m);
                    const double k2 = s2 / static_cast<double>(m);
                    for (int64_t b = 0; b < batch; ++b) {
                        const float* grow = g + (b * channels + c) * len;
                        const float* xrow = px->values.data() + (b * channels + c) * len;
                        float* dst = px->scratch.data() + (b * channels + c) * len;
                        for (int64_t l = 0; l < len; ++l) {
                            const double xhat = (xrow[l] - mean[c]) * inv_std[c];
                            dst[l] += static_cast<float>(gm * inv_std[c] *
                                                         (grow[l] - k1 - xhat * k2));
                        }
                    }
                } else {
                    const double scale = gm * inv_std[c];
                    for (int64_t b = 0; b < batch; ++b) {
                        const float* grow = g + (b * channels + c) * len;
                        float* dst = px->scratch.data() + (b * channels + c) * len;
                        for (int64_t l = 0; l < len; ++l)
                            dst[l] += static_cast<float>(scale * grow[l]);
                    }
                }
            }
        }
    };
    return make_op_result(x.shape(), std::move(y), {x, gamma, beta}, std::move(backward));
}

Tensor tanh(const Tensor& t) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v = kernels::tanh_scalar(v);
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i) {
            const float y = n.values[i];
            p->scratch[i] += (1.0f - y * y) * n.scratch[i];
        }
    });
}

Tensor leaky_relu(const Tensor& t, float slope) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v = kernels::leaky_relu_scalar(v, slope);
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p, slope](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i)
            p->scratch[i] += (p->values[i] >= 0.0f ? 1.0f : slope) * n.scratch[i];
    });
}

Tensor softplus(const Tensor& t) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v = kernels::softplus_scalar(v);
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i)
            p->scratch[i] += kernels::sigmoid_scalar(p->values[i]) * n.scratch[i];
    });
}

Tensor softmax(const Tensor& t) {
    if (t.rank() != 1 && t.rank() != 2)
        throw ConfigError("softmax: expected 1-D or 2-D tensor");
    const int64_t n = t.dim(t.rank() - 1);
    const int64_t rows = t.size() / n;
    std::vector<float> out(static_cast<size_t>(t.size()));
    kernels::softmax_rows(t.values().data(), out.data(), rows, n);
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p, rows, n](TensorNode& node) {
        for (int64_t r = 0; r < rows; ++r) {
            const float* y = node.values.data() + r * n;
            const float* g = node.scratch.data() + r * n;
            float* dst = p->scratch.data() + r * n;
            double dot = 0.0;
            for (int64_t i = 0; i < n; ++i) dot += static_cast<double>(g[i]) * y[i];
            const float d = static_cast<float>(dot);
            for (int64_t i = 0; i < n; ++i) dst[i] += y[i] * (g[i] - d);
        }
    });
}

Tensor log(const Tensor& t) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) {
        if (!(v > 0.0f)) throw NumericError("log: input must be strictly positive");
        v = std::log(v);
    }
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i) p->scratch[i] += n.scratch[i] / p->values[i];
    });
}

Tensor clamp_min(const Tensor& t, float lo) {
    std::vector<float> out(t.values().begin(), t.values().end());
    for (auto& v : out) v = std::max(v, lo);
    TensorNode* p = t.node_ptr().get();
    return make_op_result(t.shape(), std::move(out), {t}, [p, lo](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i)
            if (p->values[i] > lo) p->scratch[i] += n.scratch[i];
    });
}

Tensor reshape(const Tensor& t, std::vector<int64_t> shape) {
    if (shape_size(shape) != t.size())
        throw ConfigError("reshape: element count changes from " + shape_str(t.shape()) +
                          " to " + shape_str(shape));
    std::vector<float> out(t.values().begin(), t.values().end());
    TensorNode* p = t.node_ptr().get();
    return make_op_result(std::move(shape), std::move(out), {t}, [p](TensorNode& n) {
        for (size_t i = 0; i < n.scratch.size(); ++i) p->scratch[i] += n.scratch[i];
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ConfigError("concat_cols: no inputs");
    const int64_t rows = parts[0].dim(0);
    int64_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(0) != rows)
            throw ConfigError("concat_cols: all parts must be 2-D with equal row counts");
        total += p.dim(1);
    }
    std::vector<float> out(static_cast<size_t>(rows * total));
    int64_t col = 0;
    for (const auto& p : parts) {
        const int64_t w = p.dim(1);
        for (int64_t r = 0; r < rows; ++r)
            std::memcpy(out.data() + r * total + col, p.values().data() + r * w,
                        static_cast<size_t>(w) * sizeof(float));
        col += w;
    }
    std::vector<TensorNode*> nodes;
    std::vector<int64_t> widths;
    for (const auto& p : parts) {
        nodes.push_back(p.node_ptr().get());
        widths.push_back(p.dim(1));
    }
    return make_op_result({rows, total}, std::move(out), parts,
                          [nodes, widths, rows, total](TensorNode& n) {
        int64_t col = 0;
        for (size_t pi = 0; pi < nodes.size(); ++pi) {
            const int64_t w = widths[pi];
            if (nodes[pi]->requires_grad) {
                for (int64_t r = 0; r < rows; ++r) {
                    const float* src = n.scratch.data() + r * total + col;
                    float* dst = nodes[pi]->scratch.data() + r * w;
                    for (int64_t c = 0; c < w; ++c) dst[c] += src[c];
                }
            }
            col += w;
        }
    });
}

namespace {

// Shared slicing logic for channel/column splits: parent viewed as
// [rows x groups*span], child g owns columns [g*span, (g+1)*span).
Tensor slice_block(const Tensor& t, std::vector<int64_t> child_shape, int64_t rows,
                   int64_t row_width, int64_t offset, int64_t span) {
    std::vector<float> out(static_cast<size_t>(rows * span));
    for (int64_t r = 0; r < rows; ++r)
        std::memcpy(out.data() + r * span, t.values().data() + r * row_width + offset,
                    static_cast<size_t>(span) * sizeof(float));
    TensorNode* p = t.node_ptr().get();
    return make_op_result(std::move(child_shape), std::move(out), {t},
                          [p, rows, row_width, offset, span](TensorNode& n) {
        for (int64_t r = 0; r < rows; ++r) {
            const float* src = n.scratch.data() + r * span;
            float* dst = p->scratch.data() + r * row_width + offset;
            for (int64_t c = 0; c < span; ++c) dst[c] += src[c];
        }
    });
}

}  // namespace

std::vector<Tensor> split_channels(const Tensor& t, int64_t groups) {
    if (t.rank() != 3) throw ConfigError("split_channels: expected [B x C x L]");
    const int64_t batch = t.dim(0), channels = t.dim(1), len = t.dim(2);
    if (groups < 1 || channels % groups != 0)
        throw ConfigError("split_channels: channel count not divisible by group count");
    const int64_t span = (channels / groups) * len;
    std::vector<Tensor> outs;
    outs.reserve(static_cast<size_t>(groups));
    for (int64_t g = 0; g < groups; ++g)
        outs.push_back(slice_block(t, {batch, channels / groups, len}, batch, channels * len,
                                   g * span, span));
    return outs;
}

std::vector<Tensor> split_cols(const Tensor& t, int64_t groups) {
    if (t.rank() != 2) throw ConfigError("split_cols: expected [B x F]");
    const int64_t rows = t.dim(0), cols = t.dim(1);
    if (groups < 1 || cols % groups != 0)
        throw ConfigError("split_cols: column count not divisible by group count");
    const int64_t span = cols / groups;
    std::vector<Tensor> outs;
    outs.reserve(static_cast<size_t>(groups));
    for (int64_t g = 0; g < groups; ++g)
        outs.push_back(slice_block(t, {rows, span}, rows, cols, g * span, span));
    return outs;
}

Tensor sum_all(const Tensor& t) {
    double acc = 0.0;
    for (float v : t.values()) acc += v;
    TensorNode* p = t.node_ptr().get();
    return make_op_result({1}, {static_cast<float>(acc)}, {t}, [p](TensorNode& n) {
        const float g = n.scratch[0];
        for (auto& s : p->scratch) s += g;
    });
}

Tensor mean_all(const Tensor& t) {
    if (t.size() == 0) throw ConfigError("mean_all: empty tensor");
    double acc = 0.0;
    for (float v : t.values()) acc += v;
    const double inv = 1.0 / static_cast<double>(t.size());
    TensorNode* p = t.node_ptr().get();
    return make_op_result({1}, {static_cast<float>(acc * inv)}, {t}, [p, inv](TensorNode& n) {
        const float g = static_cast<float>(n.scratch[0] * inv);
        for (auto& s : p->scratch) s += g;
    });
}

Tensor sum_last(const Tensor& t) {
    if (t.rank() != 2) throw ConfigError("sum_last: expected [B x D]");
    const int64_t rows = t.dim(0), cols = t.dim(1);
    std::vector<float> out(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int64_t c = 0; c < cols; ++c) acc += t.values()[r * cols + c];
        out[static_cast<size_t>(r)] = static_cast<float>(acc);
    }
    TensorNode* p = t.node_ptr().get();
    return make_op_result({rows}, std::move(out), {t}, [p, rows, cols](TensorNode& n) {
        for (int64_t r = 0; r < rows; ++r) {
            const float g = n.scratch[static_cast<size_t>(r)];
            float* dst = p->scratch.data() + r * cols;
            for (int64_t c = 0; c < cols; ++c) dst[c] += g;
        }
    });
}

Tensor take_per_row(const Tensor& t, const std::vector<int64_t>& idx) {
    if (t.rank() != 2) throw ConfigError("take_per_row: expected [B x N]");
    const int64_t rows = t.dim(0), cols = t.dim(1);
    if (static_cast<int64_t>(idx.size()) != rows)
        throw ConfigError("take_per_row: index count does not match row count");
    std::vector<float> out(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const int64_t i = idx[static_cast<size_t>(r)];
        if (i < 0 || i >= cols) throw ConfigError("take_per_row: index out of range");
        out[static_cast<size_t>(r)] = t.values()[r * cols + i];
    }
    TensorNode* p = t.node_ptr().get();
    auto indices = idx;
    return make_op_result({rows}, std::move(out), {t},
                          [p, cols, indices = std::move(indices)](TensorNode& n) {
        for (size_t r = 0; r < indices.size(); ++r)
            p->scratch[static_cast<int64_t>(r) * cols + indices[r]] += n.scratch[r];
    });
}

Tensor gaussian_kl(const Tensor& mu, const Tensor& sigma) {
    check_same_shape(mu, sigma, "gaussian_kl");
    if (mu.rank() != 2) throw ConfigError("gaussian_kl: expected [B x D]");
    const int64_t rows = mu.dim(0), cols = mu.dim(1);
    std::vector<float> out(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int64_t c = 0; c < cols; ++c) {
            const double m = mu.values()[r * cols + c];
            const double s = sigma.values()[r * cols + c];
            if (!(s > 0.0)) throw NumericError("gaussian_kl: sigma must be positive");
            acc += m * m + s * s - 1.0 - 2.0 * std::log(s);
        }
        out[static_cast<size_t>(r)] = static_cast<float>(0.5 * acc);
    }
    TensorNode* pm = mu.node_ptr().get();
    TensorNode* ps = sigma.node_ptr().get();
    return make_op_result({rows}, std::move(out), {mu, sigma}, [pm, ps, cols](TensorNode& n) {
        for (size_t r = 0; r < n.scratch.size(); ++r) {
            const float g = n.scratch[r];
            const int64_t base = static_cast<int64_t>(r) * cols;
            if (pm->requires_grad)
                for (int64_t c = 0; c < cols; ++c)
                    pm->scratch[base + c] += g * pm->values[base + c];
            if (ps->requires_grad)
                for (int64_t c = 0; c < cols; ++c) {
                    const float s = ps->values[base + c];
                    ps->scratch[base + c] += g * (s - 1.0f / s);
                }
        }
    });
}

}  // namespace ddn
