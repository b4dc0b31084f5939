#pragma once

#include <functional>

#include "deskstage/autodiff/tensor.hpp"

namespace deskstage::training {

using autodiff::Tensor;

/// G(image, light_from, light_to).
template <typename T>
using RelightFn = std::function<Tensor<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&)>;

template <typename T>
Tensor<T> loss_l1(const Tensor<T>& prediction, const Tensor<T>& target);

/// L1 between the source and the prediction relit back to the source light.
template <typename T>
Tensor<T> loss_cycle(const Tensor<T>& source, const Tensor<T>& prediction, const Tensor<T>& light_s,
                     const Tensor<T>& light_t, const RelightFn<T>& g);

/// Least-squares adversarial terms over a patch score map.
template <typename T>
Tensor<T> adversarial_real(const Tensor<T>& scores);  // mean (s - 1)^2
template <typename T>
Tensor<T> adversarial_fake(const Tensor<T>& scores);  // mean s^2

}  // namespace deskstage::training
