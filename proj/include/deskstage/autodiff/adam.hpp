#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deskstage/autodiff/tensor.hpp"

namespace deskstage::autodiff {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moment buffers, one per parameter tensor.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    std::int64_t step = 0;

    bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// Parameters without a gradient buffer are treated as having zero gradient.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, const AdamOptions& opt);

/// Scales all gradients so their joint L2 norm is at most max_norm. Returns
/// the norm before scaling.
template <typename T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm);

template <typename T>
void zero_grads(std::span<Tensor<T>> params);

}  // namespace deskstage::autodiff
