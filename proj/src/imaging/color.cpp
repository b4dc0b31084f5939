#include "deskstage/imaging/color.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace deskstage::imaging {

namespace {

std::array<float, 256> build_decode_table() {
    std::array<float, 256> table{};
    for (int code = 0; code < 256; ++code) {
        const double v = code / 255.0;
        const double lin = v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
        table[code] = static_cast<float>(lin);
    }
    return table;
}

const std::array<float, 256>& decode_table() {
    static const std::array<float, 256> table = build_decode_table();
    return table;
}

template <class Raster>
Raster decode_raster(const Srgb8Image& img, float scale) {
    if (img.width <= 0 || img.height <= 0) throw ImagingError("empty input raster");
    if (img.channels != 1 && img.channels != 3) {
        throw ImagingError("unsupported channel count " + std::to_string(img.channels));
    }
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    if (img.data.size() != pixels * img.channels) throw ImagingError("raster data length mismatch");
    const auto& table = decode_table();
    std::vector<float> out(pixels * 3);
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < 3; ++c) {
            const std::uint8_t code = img.data[p * img.channels + (img.channels == 1 ? 0 : c)];
            out[p * 3 + c] = table[code] * scale;
        }
    }
    return Raster(img.width, img.height, std::move(out));
}

template <class Raster>
Srgb8Image encode_raster(const Raster& img, float inv_scale) {
    Srgb8Image out{img.width(), img.height(), 3, {}};
    out.data.resize(img.value_count());
    auto values = img.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) throw ImagingError("cannot encode NaN value");
        out.data[i] = srgb_encode(values[i] * inv_scale);
    }
    return out;
}

}  // namespace

float srgb_decode(std::uint8_t code) { return decode_table()[code]; }

std::uint8_t srgb_encode(float linear) {
    const double v = std::clamp(static_cast<double>(linear), 0.0, 1.0);
    const double enc = v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
    return static_cast<std::uint8_t>(std::lround(std::clamp(enc, 0.0, 1.0) * 255.0));
}

float srgb_eotf(float encoded) {
    const double v = std::clamp(static_cast<double>(encoded), 0.0, 1.0);
    return static_cast<float>(v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4));
}

float srgb_oetf(float linear) {
    const double v = std::clamp(static_cast<double>(linear), 0.0, 1.0);
    return static_cast<float>(v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055);
}

ImageFrame encode_frame(const ImageFrame& linear) {
    ImageFrame out = linear;
    for (float& v : out.data()) v = srgb_oetf(v);
    return out;
}

ImageFrame linearize_frame(const ImageFrame& encoded) {
    ImageFrame out = encoded;
    for (float& v : out.data()) v = srgb_eotf(v);
    return out;
}

ImageFrame srgb_to_linear(const Srgb8Image& img) { return decode_raster<ImageFrame>(img, 1.0f); }

Srgb8Image linear_to_srgb(const ImageFrame& img) { return encode_raster(img, 1.0f); }

LightFrame light_from_srgb(const Srgb8Image& img, float max_radiance) {
    if (!(max_radiance > 0.0f)) throw ImagingError("max_radiance must be positive");
    return decode_raster<LightFrame>(img, max_radiance);
}

Srgb8Image light_to_srgb(const LightFrame& light, float max_radiance) {
    if (!(max_radiance > 0.0f)) throw ImagingError("max_radiance must be positive");
    return encode_raster(light, 1.0f / max_radiance);
}

LightFrame quantize_light(const LightFrame& light, float max_radiance) {
    return light_from_srgb(light_to_srgb(light, max_radiance), max_radiance);
}

}  // namespace deskstage::imaging
