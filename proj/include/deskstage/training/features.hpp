#pragma once

#include <cstdint>
#include <vector>

#include "deskstage/nn/params.hpp"

namespace deskstage::training {

using autodiff::Tensor;

/// Frozen multi-scale conv pyramid with seeded random weights. Each scale is
/// two 3x3 convs with leaky ReLU; scales are separated by 2x average pooling.
template <typename T>
class FeatureExtractor {
public:
    explicit FeatureExtractor(std::uint64_t seed, std::vector<int> channels = {8, 16, 32});

    std::uint64_t seed() const { return seed_; }
    std::size_t scales() const { return weights_.size() / 2; }

    /// One feature map per scale for a [1, 3, H, W] image.
    std::vector<Tensor<T>> features(const Tensor<T>& image) const;
    /// Read-only view of the frozen weights, for inspection.
    const std::vector<Tensor<T>>& weights() const { return weights_; }

private:
    std::uint64_t seed_;
    std::vector<Tensor<T>> weights_;
    std::vector<Tensor<T>> biases_;
};

/// Sum over scales of the mean squared feature difference.
template <typename T>
Tensor<T> loss_perceptual(const Tensor<T>& a, const Tensor<T>& b, const FeatureExtractor<T>& f);

}  // namespace deskstage::training
