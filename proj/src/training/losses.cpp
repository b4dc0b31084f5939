#include "deskstage/training/losses.hpp"

#include "deskstage/autodiff/ops.hpp"
#include "deskstage/nn/params.hpp"

namespace deskstage::training {

namespace ad = autodiff;

template <typename T>
Tensor<T> loss_l1(const Tensor<T>& prediction, const Tensor<T>& target) {
    return ad::l1(prediction, target);
}

template <typename T>
Tensor<T> loss_cycle(const Tensor<T>& source, const Tensor<T>& prediction, const Tensor<T>& light_s,
                     const Tensor<T>& light_t, const RelightFn<T>& g) {
    if (!g) throw nn::NetworkError("cycle loss needs a generator");
    return ad::l1(source, g(prediction, light_t, light_s));
}

template <typename T>
Tensor<T> adversarial_real(const Tensor<T>& scores) {
    return ad::mse(scores, Tensor<T>::full(scores.shape(), T(1)));
}

template <typename T>
Tensor<T> adversarial_fake(const Tensor<T>& scores) {
    return ad::mse(scores, Tensor<T>::zeros(scores.shape()));
}

template Tensor<float> loss_l1<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> loss_l1<double>(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> loss_cycle<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                         const Tensor<float>&, const RelightFn<float>&);
template Tensor<double> loss_cycle<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                           const Tensor<double>&, const RelightFn<double>&);
template Tensor<float> adversarial_real<float>(const Tensor<float>&);
template Tensor<double> adversarial_real<double>(const Tensor<double>&);
template Tensor<float> adversarial_fake<float>(const Tensor<float>&);
template Tensor<double> adversarial_fake<double>(const Tensor<double>&);

}  // namespace deskstage::training
