#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace deskstage::imaging {

class ImagingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major, channel-interleaved RGB raster of linear radiometric values.
/// The tag keeps camera frames and monitor patterns from being mixed up.
template <class Tag>
class RgbRaster {
public:
    static constexpr int kChannels = 3;

    RgbRaster() = default;
    RgbRaster(int width, int height, float fill = 0.0f);
    RgbRaster(int width, int height, std::vector<float> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t value_count() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const RgbRaster& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    float& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    const std::vector<float>& values() const { return data_; }

    bool all_finite() const;
    float max_value() const;
    float min_value() const;

    friend bool operator==(const RgbRaster&, const RgbRaster&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

struct CameraTag {};
struct MonitorTag {};

/// Camera frame (I, I_s, I_t and relit outputs).
using ImageFrame = RgbRaster<CameraTag>;
/// Monitor pattern, one value triple per emitter cell (L, L_s, L_t).
using LightFrame = RgbRaster<MonitorTag>;

extern template class RgbRaster<CameraTag>;
extern template class RgbRaster<MonitorTag>;

/// Throws unless every value lies in [0, max_radiance].
void validate_light(const LightFrame& light, float max_radiance);

/// Binary per-pixel mask, bit-packed row-major.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height);
    Mask(int width, int height, std::span<const std::uint8_t> values);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool same_shape(const Mask& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool get(int x, int y) const {
        const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, int y, bool on);

    std::size_t count() const;
    std::span<const std::uint64_t> words() const { return words_; }
    std::vector<std::uint8_t> to_bytes() const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> words_;
};

/// 8-bit interleaved raster as stored in PNG files (1 or 3 channels).
struct Srgb8Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    friend bool operator==(const Srgb8Image&, const Srgb8Image&) = default;
};

}  // namespace deskstage::imaging
