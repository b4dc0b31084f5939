#include "deskstage/nn/params.hpp"

#include <cmath>

namespace deskstage::nn {

template <typename T>
Tensor<T> ParamSet<T>::add(std::string name, Tensor<T> tensor) {
    for (const auto& n : names_) {
        if (n == name) throw NetworkError("duplicate parameter name " + name);
    }
    tensor.set_requires_grad(true);
    names_.push_back(std::move(name));
    tensors_.push_back(tensor);
    return tensor;
}

template <typename T>
const Tensor<T>& ParamSet<T>::get(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return tensors_[i];
    }
    throw NetworkError("no parameter named " + name);
}

template <typename T>
std::size_t ParamSet<T>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

template <typename T>
void ParamSet<T>::append_to(autodiff::Checkpoint& ckpt, const std::string& prefix) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        ckpt.entries.push_back(autodiff::make_entry(prefix + names_[i], tensors_[i]));
    }
}

template <typename T>
void ParamSet<T>::load_from(const autodiff::Checkpoint& ckpt, const std::string& prefix) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const auto* entry = ckpt.find(prefix + names_[i]);
        if (!entry) throw NetworkError("checkpoint lacks parameter " + prefix + names_[i]);
        autodiff::load_entry(*entry, tensors_[i]);
    }
}

template <typename T>
ParamSet<T> ParamSet<T>::clone() const {
    ParamSet out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], tensors_[i].detach());
    return out;
}

template <typename T>
Tensor<T> init_fan_in(Shape shape, int fan_in, double gain, std::mt19937_64& rng) {
    if (fan_in < 1) throw NetworkError("fan_in must be positive");
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    std::vector<T> values(autodiff::numel(shape));
    for (auto& v : values) v = static_cast<T>(dist(rng));
    return Tensor<T>::from_data(std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> image_to_tensor(const imaging::ImageFrame& img) {
    if (img.empty()) throw NetworkError("empty image");
    const int w = img.width(), h = img.height();
    std::vector<T> values(img.value_count());
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    auto src = img.data();
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) values[c * plane + p] = static_cast<T>(src[p * 3 + c]);
    }
    return Tensor<T>::from_data({1, 3, h, w}, std::move(values));
}

template <typename T>
imaging::ImageFrame tensor_to_image(const Tensor<T>& t) {
    if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != 3) {
        throw NetworkError("expected a [1,3,H,W] tensor, got " + autodiff::shape_string(t.shape()));
    }
    const int h = t.dim(2), w = t.dim(3);
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    std::vector<float> values(plane * 3);
    auto src = t.data();
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) values[p * 3 + c] = static_cast<float>(src[c * plane + p]);
    }
    return imaging::ImageFrame(w, h, std::move(values));
}

template <typename T>
Tensor<T> light_to_tensor(const imaging::LightFrame& light, float max_radiance) {
    if (!(max_radiance > 0.0f)) throw NetworkError("max_radiance must be positive");
    std::vector<T> values(light.value_count());
    auto src = light.data();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(src[i] / max_radiance);
    const int n = static_cast<int>(values.size());
    return Tensor<T>::from_data({1, n}, std::move(values));
}

template class ParamSet<float>;
template class ParamSet<double>;
template Tensor<float> init_fan_in<float>(Shape, int, double, std::mt19937_64&);
template Tensor<double> init_fan_in<double>(Shape, int, double, std::mt19937_64&);
template Tensor<float> image_to_tensor<float>(const imaging::ImageFrame&);
template Tensor<double> image_to_tensor<double>(const imaging::ImageFrame&);
template imaging::ImageFrame tensor_to_image<float>(const Tensor<float>&);
template imaging::ImageFrame tensor_to_image<double>(const Tensor<double>&);
template Tensor<float> light_to_tensor<float>(const imaging::LightFrame&, float);
template Tensor<double> light_to_tensor<double>(const imaging::LightFrame&, float);

}  // namespace deskstage::nn
