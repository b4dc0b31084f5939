#pragma once

#include "deskstage/autodiff/tensor.hpp"

namespace deskstage::autodiff {

// Differentiable operations. Shapes must agree exactly; the only broadcast is
// the per-channel bias add. Image tensors are NCHW, feature vectors [N, K].

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

/// x[N, C, ...] + bias[C].
template <typename T> Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& bias);

/// Cross-correlation. weight [O, C, kh, kw]; bias [O] or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int pad);

/// Style modulation followed by per-output-channel normalization:
///   W'[o][i] = s[i] * W[o][i],  W''[o] = W'[o] / sqrt(sum W'[o]^2 + eps).
/// With eps = 0 an all-zero output channel is a division-by-zero error.
template <typename T>
Tensor<T> demodulate(const Tensor<T>& weight, const Tensor<T>& scales, T eps = T(1e-8));

/// 2x bilinear upsampling, half-pixel centers (align_corners = false).
template <typename T> Tensor<T> bilinear_upsample_2x(const Tensor<T>& x);
/// 2x2 average pooling; H and W must be even.
template <typename T> Tensor<T> avg_pool_2x(const Tensor<T>& x);

/// Concatenation along dimension 1 (channels or features).
template <typename T> Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b);

/// x[N, K] * W[M, K]^T + b[M].
template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Divides each location's channel vector by sqrt(mean(x^2) + eps).
template <typename T> Tensor<T> pixel_norm(const Tensor<T>& x, T eps = T(1e-8));
/// x if x >= 0 else slope[c] * x.
template <typename T> Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& slopes);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

/// Mean absolute and mean squared differences (scalar results).
template <typename T> Tensor<T> l1(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// code[N, C] -> [N, C, H, W], constant over space.
template <typename T> Tensor<T> broadcast_spatial(const Tensor<T>& code, int height, int width);
/// Edge-replicating pad of an NCHW tensor.
template <typename T>
Tensor<T> pad_replicate(const Tensor<T>& x, int top, int bottom, int left, int right);
/// Spatial window [y0, y0+h) x [x0, x0+w) of an NCHW tensor.
template <typename T> Tensor<T> crop(const Tensor<T>& x, int y0, int x0, int h, int w);

}  // namespace deskstage::autodiff
