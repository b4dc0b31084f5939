#pragma once

#include "deskstage/nn/params.hpp"

namespace deskstage::nn {

struct LightEncoderConfig {
    int light_width = 16;
    int light_height = 9;
    int hidden = 512;
    int code_length = 256;

    int input_length() const { return light_width * light_height * 3; }
};

/// Two fully connected stages, each followed by pixel normalization and a
/// learnable leaky ReLU.
template <typename T>
class LightEncoder {
public:
    LightEncoder() = default;
    /// Registers its tensors in `params` under `prefix`.
    LightEncoder(const LightEncoderConfig& cfg, std::mt19937_64& rng, ParamSet<T>& params,
                 const std::string& prefix);

    const LightEncoderConfig& config() const { return cfg_; }

    /// light [1, W*H*3] -> code [1, code_length].
    Tensor<T> encode(const Tensor<T>& light) const;
    /// Output of the final normalization, before the last activation.
    Tensor<T> encode_normalized(const Tensor<T>& light) const;

private:
    void check_input(const Tensor<T>& light) const;

    LightEncoderConfig cfg_;
    Tensor<T> fc1_w_, fc1_b_, slope1_;
    Tensor<T> fc2_w_, fc2_b_, slope2_;
};

}  // namespace deskstage::nn
