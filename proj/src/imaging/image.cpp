#include "deskstage/imaging/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace deskstage::imaging {

template <class Tag>
RgbRaster<Tag>::RgbRaster(int width, int height, float fill)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ImagingError("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

template <class Tag>
RgbRaster<Tag>::RgbRaster(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw ImagingError("raster dimensions must be non-negative");
    if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
        throw ImagingError("raster data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(width) + "x" +
                           std::to_string(height) + "x3");
    }
    if (!all_finite()) throw ImagingError("raster contains non-finite values");
}

template <class Tag>
bool RgbRaster<Tag>::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

template <class Tag>
float RgbRaster<Tag>::max_value() const {
    return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

template <class Tag>
float RgbRaster<Tag>::min_value() const {
    return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

template class RgbRaster<CameraTag>;
template class RgbRaster<MonitorTag>;

void validate_light(const LightFrame& light, float max_radiance) {
    if (!(max_radiance > 0.0f)) throw ImagingError("max_radiance must be positive");
    for (float v : light.data()) {
        if (!(v >= 0.0f && v <= max_radiance)) {
            throw ImagingError("light value " + std::to_string(v) + " outside [0, " +
                               std::to_string(max_radiance) + "]");
        }
    }
}

Mask::Mask(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ImagingError("mask dimensions must be non-negative");
    words_.assign((pixel_count() + 63) / 64, 0);
}

Mask::Mask(int width, int height, std::span<const std::uint8_t> values) : Mask(width, height) {
    if (values.size() != pixel_count()) throw ImagingError("mask data length mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i]) words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
}

void Mask::set(int x, int y, bool on) {
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (on) {
        words_[i >> 6] |= bit;
    } else {
        words_[i >> 6] &= ~bit;
    }
}

std::size_t Mask::count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::vector<std::uint8_t> Mask::to_bytes() const {
    std::vector<std::uint8_t> out(pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (words_[i >> 6] >> (i & 63)) & 1u;
    return out;
}

}  // namespace deskstage::imaging
