#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "deskstage/autodiff/checkpoint.hpp"
#include "deskstage/autodiff/tensor.hpp"
#include "deskstage/imaging/image.hpp"

namespace deskstage::nn {

using autodiff::Shape;
using autodiff::Tensor;

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered collection of named trainable tensors.
template <typename T>
class ParamSet {
public:
    Tensor<T> add(std::string name, Tensor<T> tensor);
    const Tensor<T>& get(const std::string& name) const;

    std::vector<Tensor<T>>& tensors() { return tensors_; }
    const std::vector<Tensor<T>>& tensors() const { return tensors_; }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t scalar_count() const;

    void append_to(autodiff::Checkpoint& ckpt, const std::string& prefix) const;
    void load_from(const autodiff::Checkpoint& ckpt, const std::string& prefix);
    /// Deep copy of all values; the copy shares nothing with this set.
    ParamSet clone() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor<T>> tensors_;
};

/// Normal(0, gain / sqrt(fan_in)) draws from a caller-owned generator.
template <typename T>
Tensor<T> init_fan_in(Shape shape, int fan_in, double gain, std::mt19937_64& rng);

/// ImageFrame (HWC) <-> [1, 3, H, W] tensor.
template <typename T>
Tensor<T> image_to_tensor(const imaging::ImageFrame& img);
template <typename T>
imaging::ImageFrame tensor_to_image(const Tensor<T>& t);

/// LightFrame divided by max_radiance, flattened row-major and channel-
/// interleaved into [1, W*H*3].
template <typename T>
Tensor<T> light_to_tensor(const imaging::LightFrame& light, float max_radiance);

}  // namespace deskstage::nn
