#pragma once

#include <vector>

#include "ddn/tensor.hpp"

namespace ddn {

// Elementwise arithmetic. Shapes must match exactly; the only broadcasting in
// this library is the documented bias add inside linear/conv1d.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, float s);
Tensor add_scalar(const Tensor& t, float s);
Tensor square(const Tensor& t);

/// [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x[B x in] * w[out x in]^T + b[out] -> [B x out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Same-padded stride-1 convolution; x is [B x Cin x L] or [Cin x L],
/// w is [Cout x Cin x k] with odd k, bias [Cout].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b);

/// Repeats each element `factor` times along the innermost axis.
Tensor upsample_nearest(const Tensor& x, int64_t factor);

/// Batch normalization over [B x F] or [B x C x L]; statistics per feature /
/// channel. Train mode normalizes by batch statistics and updates the running
/// buffers; eval mode reads the running buffers. Requires B >= 2 in train mode.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   std::vector<float>& running_mean, std::vector<float>& running_var,
                   bool training, float momentum = 0.1f, float eps = 1e-5f);

Tensor tanh(const Tensor& t);
Tensor leaky_relu(const Tensor& t, float slope);
Tensor softplus(const Tensor& t);
/// Softmax over the innermost axis of a 1-D or 2-D tensor.
Tensor softmax(const Tensor& t);
/// Elementwise natural log; rejects non-positive inputs.
Tensor log(const Tensor& t);
Tensor clamp_min(const Tensor& t, float lo);

Tensor reshape(const Tensor& t, std::vector<int64_t> shape);
/// Concatenates 2-D tensors with equal row counts along the column axis.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Splits [B x C x L] into `groups` tensors [B x C/groups x L].
std::vector<Tensor> split_channels(const Tensor& t, int64_t groups);
/// Splits [B x F] into `groups` tensors [B x F/groups].
std::vector<Tensor> split_cols(const Tensor& t, int64_t groups);

Tensor sum_all(const Tensor& t);
Tensor mean_all(const Tensor& t);
/// Row sums: [B x D] -> [B].
Tensor sum_last(const Tensor& t);
/// Picks one element per row: t[B x N], idx[B] -> [B].
Tensor take_per_row(const Tensor& t, const std::vector<int64_t>& idx);

/// Per-row KL(N(mu, diag sigma^2) || N(0, I)): [B x D] inputs -> [B].
Tensor gaussian_kl(const Tensor& mu, const Tensor& sigma);

}  // namespace ddn
