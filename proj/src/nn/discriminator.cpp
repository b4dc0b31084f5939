#include "deskstage/nn/discriminator.hpp"

#include <cmath>

#include "deskstage/autodiff/ops.hpp"

namespace deskstage::nn {

namespace ad = autodiff;

int receptive_field(const std::vector<DiscLayer>& layers) {
    int rf = 1;
    int jump = 1;
    for (const auto& l : layers) {
        if (l.kernel < 1 || l.stride < 1) throw NetworkError("invalid discriminator layer");
        rf += (l.kernel - 1) * jump;
        jump *= l.stride;
    }
    return rf;
}

DiscriminatorConfig DiscriminatorConfig::toy(int width, int height) {
    DiscriminatorConfig c;
    c.width = width;
    c.height = height;
    c.layers = {{16, 4, 2, 1}, {32, 4, 1, 1}, {32, 4, 1, 1}, {1, 4, 1, 1}};
    return c;
}

DiscriminatorConfig DiscriminatorConfig::paper_scale(int width, int height) {
    DiscriminatorConfig c;
    c.width = width;
    c.height = height;
    c.layers = {{64, 4, 2, 1}, {128, 4, 2, 1}, {256, 4, 2, 1}, {512, 4, 1, 1}, {1, 4, 1, 1}};
    return c;
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
    if (cfg.layers.empty()) throw NetworkError("discriminator needs at least one layer");
    if (cfg.layers.back().out_channels != 1) throw NetworkError("last discriminator layer must emit one channel");
    std::mt19937_64 rng(cfg.seed);
    const double gain = std::sqrt(2.0 / (1.0 + cfg.slope * cfg.slope));
    int in = 3;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const auto& l = cfg.layers[i];
        const std::string name = "layer" + std::to_string(i);
        const int fan_in = in * l.kernel * l.kernel;
        const double g = i + 1 == cfg.layers.size() ? gain * cfg.output_gain : gain;
        weights_.push_back(params_.add(name + ".weight",
                                       init_fan_in<T>({l.out_channels, in, l.kernel, l.kernel}, fan_in, g, rng)));
        biases_.push_back(params_.add(name + ".bias", Tensor<T>::zeros({l.out_channels})));
        in = l.out_channels;
    }
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& image) const {
    if (!image.defined() || image.shape() != Shape{1, 3, cfg_.height, cfg_.width}) {
        throw NetworkError("discriminator expects [1,3," + std::to_string(cfg_.height) + "," +
                           std::to_string(cfg_.width) + "], got " +
                           (image.defined() ? ad::shape_string(image.shape()) : std::string("undefined")));
    }
    Tensor<T> x = image;
    for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
        const auto& l = cfg_.layers[i];
        x = ad::conv2d(x, weights_[i], biases_[i], l.stride, l.pad);
        if (i + 1 < cfg_.layers.size()) x = ad::leaky_relu(x, T(cfg_.slope));
    }
    return x;
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace deskstage::nn
