#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "deskstage/autodiff/ops.hpp"
#include "deskstage/imaging/image.hpp"

namespace deskstage::test {

inline imaging::ImageFrame random_frame(int w, int h, std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    imaging::ImageFrame f(w, h);
    for (float& v : f.data()) v = u(rng);
    return f;
}

inline imaging::LightFrame random_light(int w, int h, std::mt19937_64& rng, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(0.0f, hi);
    imaging::LightFrame f(w, h);
    for (float& v : f.data()) v = u(rng);
    return f;
}

inline autodiff::Tensor<double> random_tensor(autodiff::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                              double hi = 1.0, bool requires_grad = true) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(autodiff::numel(shape));
    for (double& x : v) x = u(rng);
    return autodiff::Tensor<double>::from_data(std::move(shape), std::move(v), requires_grad);
}

/// Worst relative disagreement between analytic and central-difference
/// gradients of `loss` over every entry of every input. The denominator is
/// floored at `floor` so near-zero gradients compare absolutely.
inline double gradient_check(const std::function<autodiff::Tensor<double>()>& loss,
                             std::vector<autodiff::Tensor<double>> inputs, double h = 1e-5, double floor = 1e-3,
                             std::size_t max_entries = 200) {
    for (auto& t : inputs) t.zero_grad();
    autodiff::backward(loss());
    double worst = 0.0;
    for (auto& t : inputs) {
        const std::vector<double> analytic(t.grad().begin(), t.grad().end());
        auto values = t.mutable_data();
        const std::size_t stride = std::max<std::size_t>(1, values.size() / max_entries);
        for (std::size_t i = 0; i < values.size(); i += stride) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = loss().item();
            values[i] = saved - h;
            const double down = loss().item();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
            worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
        }
    }
    return worst;
}

/// Random projection of a tensor to a scalar, so every output entry matters.
inline autodiff::Tensor<double> project(const autodiff::Tensor<double>& y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    auto w = random_tensor(y.shape(), rng, -1.0, 1.0, false);
    return autodiff::sum(autodiff::mul(y, w));
}

}  // namespace deskstage::test
