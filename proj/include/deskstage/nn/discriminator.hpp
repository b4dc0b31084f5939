#pragma once

#include <vector>

#include "deskstage/nn/params.hpp"

namespace deskstage::nn {

struct DiscLayer {
    int out_channels = 1;
    int kernel = 4;
    int stride = 1;
    int pad = 1;
};

/// Input footprint (in pixels, per side) of one output score.
int receptive_field(const std::vector<DiscLayer>& layers);

struct DiscriminatorConfig {
    int width = 32;
    int height = 48;
    std::vector<DiscLayer> layers;
    double slope = 0.2;
    /// Init gain multiplier for the score layer.
    double output_gain = 1.0;
    std::uint64_t seed = 2;

    /// Four layers, 22-pixel receptive field.
    static DiscriminatorConfig toy(int width, int height);
    /// Five layers, 70-pixel receptive field.
    static DiscriminatorConfig paper_scale(int width, int height);
};

/// Fully convolutional patch classifier: [1, 3, H, W] -> [1, 1, h, w].
template <typename T>
class Discriminator {
public:
    explicit Discriminator(const DiscriminatorConfig& cfg);

    const DiscriminatorConfig& config() const { return cfg_; }
    ParamSet<T>& params() { return params_; }
    const ParamSet<T>& params() const { return params_; }
    int receptive_field() const { return nn::receptive_field(cfg_.layers); }

    Tensor<T> forward(const Tensor<T>& image) const;

private:
    DiscriminatorConfig cfg_;
    ParamSet<T> params_;
    std::vector<Tensor<T>> weights_, biases_;
};

}  // namespace deskstage::nn
