#include "deskstage/training/features.hpp"

#include <cmath>
#include <random>

#include "deskstage/autodiff/ops.hpp"

namespace deskstage::training {

namespace ad = autodiff;

template <typename T>
FeatureExtractor<T>::FeatureExtractor(std::uint64_t seed, std::vector<int> channels) : seed_(seed) {
    if (channels.empty()) throw nn::NetworkError("feature extractor needs at least one scale");
    std::mt19937_64 rng(seed);
    const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
    int in = 3;
    for (int c : channels) {
        for (int k = 0; k < 2; ++k) {
            const int src = k == 0 ? in : c;
            auto w = nn::init_fan_in<T>({c, src, 3, 3}, src * 9, gain, rng);
            w.set_requires_grad(false);
            weights_.push_back(w);
            std::normal_distribution<double> bias_dist(0.0, 0.05);
            std::vector<T> b(static_cast<std::size_t>(c));
            for (auto& v : b) v = static_cast<T>(bias_dist(rng));
            biases_.push_back(Tensor<T>::from_data({c}, std::move(b)));
        }
        in = c;
    }
}

template <typename T>
std::vector<Tensor<T>> FeatureExtractor<T>::features(const Tensor<T>& image) const {
    if (!image.defined() || image.rank() != 4 || image.dim(1) != 3) {
        throw nn::NetworkError("feature extractor expects [N,3,H,W]");
    }
    std::vector<Tensor<T>> out;
    Tensor<T> x = image;
    for (std::size_t s = 0; s < scales(); ++s) {
        if (s > 0) {
            const int h = x.dim(2) & ~1, w = x.dim(3) & ~1;
            if (h < 2 || w < 2) break;
            if (h != x.dim(2) || w != x.dim(3)) x = ad::crop(x, 0, 0, h, w);
            x = ad::avg_pool_2x(x);
        }
        x = ad::leaky_relu(ad::conv2d(x, weights_[2 * s], biases_[2 * s], 1, 1), T(0.2));
        x = ad::leaky_relu(ad::conv2d(x, weights_[2 * s + 1], biases_[2 * s + 1], 1, 1), T(0.2));
        out.push_back(x);
    }
    return out;
}

template <typename T>
Tensor<T> loss_perceptual(const Tensor<T>& a, const Tensor<T>& b, const FeatureExtractor<T>& f) {
    if (!a.defined() || !b.defined() || a.shape() != b.shape()) {
        throw nn::NetworkError("perceptual loss needs equally shaped inputs");
    }
    const auto fa = f.features(a);
    const auto fb = f.features(b);
    Tensor<T> total;
    for (std::size_t s = 0; s < fa.size(); ++s) {
        auto term = ad::mse(fa[s], fb[s]);
        total = total.defined() ? ad::add(total, term) : term;
    }
    return total;
}

template class FeatureExtractor<float>;
template class FeatureExtractor<double>;
template Tensor<float> loss_perceptual<float>(const Tensor<float>&, const Tensor<float>&,
                                              const FeatureExtractor<float>&);
template Tensor<double> loss_perceptual<double>(const Tensor<double>&, const Tensor<double>&,
                                                const FeatureExtractor<double>&);

}  // namespace deskstage::training
