#include "deskstage/imaging/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace deskstage::imaging {

namespace {

void require_same_shape(const ImageFrame& a, const ImageFrame& b) {
    if (!a.same_shape(b)) {
        throw ImagingError("frame dimensions differ: " + std::to_string(a.width()) + "x" +
                           std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                           "x" + std::to_string(b.height()));
    }
    if (a.empty()) throw ImagingError("empty frames");
}

}  // namespace

double mse(const ImageFrame& a, const ImageFrame& b) {
    require_same_shape(a, b);
    auto x = a.data();
    auto y = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double psnr(const ImageFrame& a, const ImageFrame& b) {
    const double err = mse(a, b);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    constexpr double kPeak = 1.0;
    return 10.0 * std::log10(kPeak * kPeak / err);
}

double rmse(const ImageFrame& a, const ImageFrame& b) { return std::sqrt(mse(a, b)); }

double mean_abs_diff(const ImageFrame& a, const ImageFrame& b) {
    require_same_shape(a, b);
    auto x = a.data();
    auto y = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(static_cast<double>(x[i]) - y[i]);
    return acc / static_cast<double>(x.size());
}

double mae(const ImageFrame& a, const ImageFrame& b) { return 100.0 * mean_abs_diff(a, b); }

double relative_l2(const ImageFrame& a, const ImageFrame& reference) {
    require_same_shape(a, reference);
    auto x = a.data();
    auto y = reference.data();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        num += d * d;
        den += static_cast<double>(y[i]) * y[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

}  // namespace deskstage::imaging
