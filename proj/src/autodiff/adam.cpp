#include "deskstage/autodiff/adam.hpp"

#include <cmath>

namespace deskstage::autodiff {

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, const AdamOptions& opt) {
    if (!(opt.lr > 0.0)) throw AutodiffError("adam: learning rate must be positive");
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].size(), T(0));
            state.v[i].assign(params[i].size(), T(0));
        }
    }
    if (state.m.size() != params.size()) throw AutodiffError("adam: state does not match parameter list");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor<T>& param = params[p];
        auto& m = state.m[p];
        auto& v = state.v[p];
        if (m.size() != param.size() || v.size() != param.size()) {
            throw AutodiffError("adam: moment shape mismatch for parameter " + std::to_string(p));
        }
        if (!param.has_grad()) {
            bool all_zero = true;
            for (std::size_t i = 0; i < m.size() && all_zero; ++i) all_zero = m[i] == T(0);
            if (all_zero) continue;
        }
        auto g = param.mutable_grad();
        auto w = param.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            const double mi = opt.beta1 * m[i] + (1.0 - opt.beta1) * gi;
            const double vi = opt.beta2 * v[i] + (1.0 - opt.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double update = opt.lr * (mi / bc1) / (std::sqrt(vi / bc2) + opt.eps);
            w[i] = static_cast<T>(w[i] - update);
        }
    }
}

template <typename T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        if (!p.has_grad()) continue;
        for (T g : p.grad()) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const T factor = static_cast<T>(max_norm / norm);
        for (auto& p : params) {
            if (!p.has_grad()) continue;
            for (T& g : p.mutable_grad()) g *= factor;
        }
    }
    return norm;
}

template <typename T>
void zero_grads(std::span<Tensor<T>> params) {
    for (auto& p : params) p.zero_grad();
}

template void adam_step<float>(std::span<Tensor<float>>, AdamState<float>&, const AdamOptions&);
template void adam_step<double>(std::span<Tensor<double>>, AdamState<double>&, const AdamOptions&);
template double clip_grad_norm<float>(std::span<Tensor<float>>, double);
template double clip_grad_norm<double>(std::span<Tensor<double>>, double);
template void zero_grads<float>(std::span<Tensor<float>>);
template void zero_grads<double>(std::span<Tensor<double>>);

}  // namespace deskstage::autodiff
