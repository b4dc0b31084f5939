#include "deskstage/linear/transport_system.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

namespace deskstage::linear {

using imaging::ImageFrame;
using imaging::LightFrame;

TransportSystem::TransportSystem(std::span<const LightFrame> lights,
                                 std::span<const ImageFrame> images) {
    if (lights.empty()) throw LinearError("transport system needs at least one frame");
    if (lights.size() != images.size()) throw LinearError("light and image counts differ");

    light_width_ = lights.front().width();
    light_height_ = lights.front().height();
    image_width_ = images.front().width();
    image_height_ = images.front().height();
    const Eigen::Index n = static_cast<Eigen::Index>(lights.size());
    lights_.resize(static_cast<Eigen::Index>(lights.front().value_count()), n);
    images_.resize(static_cast<Eigen::Index>(images.front().value_count()), n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& light = lights[static_cast<std::size_t>(i)];
        const auto& image = images[static_cast<std::size_t>(i)];
        if (light.width() != light_width_ || light.height() != light_height_) {
            throw LinearError("mixed light resolutions at column " + std::to_string(i));
        }
        if (image.width() != image_width_ || image.height() != image_height_) {
            throw LinearError("mixed image resolutions at column " + std::to_string(i));
        }
        if (!light.all_finite() || !image.all_finite()) {
            throw LinearError("non-finite entry in column " + std::to_string(i));
        }
        auto lv = light.data();
        auto iv = image.data();
        for (std::size_t r = 0; r < lv.size(); ++r) lights_(static_cast<Eigen::Index>(r), i) = lv[r];
        for (std::size_t r = 0; r < iv.size(); ++r) images_(static_cast<Eigen::Index>(r), i) = iv[r];
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(lights_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_ = svd.matrixU();
    sigma_ = svd.singularValues();
    v_ = svd.matrixV();
}

ImageFrame TransportSystem::image_column(std::size_t i) const {
    if (i >= frame_count()) throw LinearError("column index out of range");
    std::vector<float> data(static_cast<std::size_t>(images_.rows()));
    for (std::size_t r = 0; r < data.size(); ++r) {
        data[r] = static_cast<float>(images_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)));
    }
    return ImageFrame(image_width_, image_height_, std::move(data));
}

TransportSystem build_transport(const capture::CaptureSequence& seq, capture::FrameRange range) {
    if (range.size() == 0) throw LinearError("empty frame range");
    if (range.end > seq.size()) throw LinearError("frame range exceeds the sequence");
    if (!seq.linear) throw LinearError("frames must be linearized before building the transport");
    std::vector<LightFrame> lights;
    std::vector<ImageFrame> images;
    lights.reserve(range.size());
    images.reserve(range.size());
    for (std::size_t i = range.begin; i < range.end; ++i) {
        lights.push_back(seq.frames[i].light);
        images.push_back(seq.frames[i].image);
    }
    return TransportSystem(lights, images);
}

WeightVector solve_weights(const TransportSystem& ts, const LightFrame& target,
                           const SolveOptions& options) {
    if (!(options.reg >= 0.0)) throw LinearError("regularization must be non-negative");
    if (!(options.cutoff >= 0.0)) throw LinearError("cutoff must be non-negative");
    if (static_cast<Eigen::Index>(target.value_count()) != ts.light_matrix().rows()) {
        throw LinearError("target light has " + std::to_string(target.value_count()) +
                          " values, expected " + std::to_string(ts.light_matrix().rows()));
    }
    const Eigen::VectorXd& sigma = ts.singular_values();
    const double sigma_max = sigma.size() > 0 ? sigma.maxCoeff() : 0.0;
    if (!(sigma_max > 0.0)) throw LinearError("light matrix has rank zero");

    Eigen::VectorXd b(static_cast<Eigen::Index>(target.value_count()));
    auto tv = target.data();
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = tv[static_cast<std::size_t>(r)];

    const Eigen::VectorXd projected = ts.left_singular_vectors().transpose() * b;
    const auto& L = ts.light_matrix();
    const double floor = static_cast<double>(std::max(L.rows(), L.cols())) *
                         std::numeric_limits<double>::epsilon() * sigma_max;
    const double threshold = std::max(floor, options.cutoff * sigma_max);
    Eigen::VectorXd filtered = Eigen::VectorXd::Zero(sigma.size());
    int rank = 0;
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
        const double s = sigma(k);
        if (s <= threshold) continue;
        filtered(k) = projected(k) * s / (s * s + options.reg);
        ++rank;
    }

    WeightVector out;
    out.w = ts.right_singular_vectors() * filtered;
    out.residual_norm = (ts.light_matrix() * out.w - b).norm();
    out.effective_rank = rank;
    return out;
}

ImageFrame relight_linear(const TransportSystem& ts, const WeightVector& weights) {
    if (static_cast<std::size_t>(weights.w.size()) != ts.frame_count()) {
        throw LinearError("weight vector has length " + std::to_string(weights.w.size()) +
                          ", expected " + std::to_string(ts.frame_count()));
    }
    const Eigen::VectorXd flat = ts.image_matrix() * weights.w;
    std::vector<float> data(static_cast<std::size_t>(flat.size()));
    for (std::size_t r = 0; r < data.size(); ++r) data[r] = static_cast<float>(flat(static_cast<Eigen::Index>(r)));
    return ImageFrame(ts.image_width(), ts.image_height(), std::move(data));
}

ImageFrame clamp_for_display(const ImageFrame& frame) {
    ImageFrame out = frame;
    for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

}  // namespace deskstage::linear
