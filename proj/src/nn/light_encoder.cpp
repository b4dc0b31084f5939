#include "deskstage/nn/light_encoder.hpp"

#include <cmath>

#include "deskstage/autodiff/ops.hpp"

namespace deskstage::nn {

namespace ad = autodiff;

template <typename T>
LightEncoder<T>::LightEncoder(const LightEncoderConfig& cfg, std::mt19937_64& rng, ParamSet<T>& params,
                              const std::string& prefix)
    : cfg_(cfg) {
    if (cfg.light_width < 1 || cfg.light_height < 1 || cfg.hidden < 1 || cfg.code_length < 1) {
        throw NetworkError("invalid light encoder configuration");
    }
    const int in = cfg.input_length();
    const double gain = std::sqrt(2.0);
    fc1_w_ = params.add(prefix + "fc1.weight", init_fan_in<T>({cfg.hidden, in}, in, gain, rng));
    fc1_b_ = params.add(prefix + "fc1.bias", Tensor<T>::zeros({cfg.hidden}));
    slope1_ = params.add(prefix + "act1.slope", Tensor<T>::full({cfg.hidden}, T(0.2)));
    fc2_w_ = params.add(prefix + "fc2.weight",
                        init_fan_in<T>({cfg.code_length, cfg.hidden}, cfg.hidden, gain, rng));
    fc2_b_ = params.add(prefix + "fc2.bias", Tensor<T>::zeros({cfg.code_length}));
    slope2_ = params.add(prefix + "act2.slope", Tensor<T>::full({cfg.code_length}, T(0.2)));
}

template <typename T>
void LightEncoder<T>::check_input(const Tensor<T>& light) const {
    if (light.rank() != 2 || light.dim(0) != 1 || light.dim(1) != cfg_.input_length()) {
        throw NetworkError("light encoder expects [1," + std::to_string(cfg_.input_length()) + "], got " +
                           ad::shape_string(light.shape()));
    }
}

template <typename T>
Tensor<T> LightEncoder<T>::encode_normalized(const Tensor<T>& light) const {
    check_input(light);
    auto h = ad::prelu(ad::pixel_norm(ad::fully_connected(light, fc1_w_, fc1_b_)), slope1_);
    return ad::pixel_norm(ad::fully_connected(h, fc2_w_, fc2_b_));
}

template <typename T>
Tensor<T> LightEncoder<T>::encode(const Tensor<T>& light) const {
    return ad::prelu(encode_normalized(light), slope2_);
}

template class LightEncoder<float>;
template class LightEncoder<double>;

}  // namespace deskstage::nn
