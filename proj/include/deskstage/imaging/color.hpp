#pragma once

#include <cstdint>

#include "deskstage/imaging/image.hpp"

namespace deskstage::imaging {

/// sRGB electro-optical transfer for one 8-bit code, result in [0, 1].
float srgb_decode(std::uint8_t code);
/// Inverse transfer; input is clamped to [0, 1] before quantization.
std::uint8_t srgb_encode(float linear);

/// Continuous sRGB transfer pair on [0, 1] (inputs clamped).
float srgb_eotf(float encoded);
float srgb_oetf(float linear);

/// Apply the continuous transfer to every value of a frame.
ImageFrame encode_frame(const ImageFrame& linear);
ImageFrame linearize_frame(const ImageFrame& encoded);

/// Linearize an 8-bit sRGB raster. Grayscale inputs are replicated to RGB.
ImageFrame srgb_to_linear(const Srgb8Image& img);
/// Encode a linear frame for display/storage. Throws on NaN.
Srgb8Image linear_to_srgb(const ImageFrame& img);

/// Monitor patterns are stored as sRGB codes scaled to max_radiance.
LightFrame light_from_srgb(const Srgb8Image& img, float max_radiance);
Srgb8Image light_to_srgb(const LightFrame& light, float max_radiance);

/// Snap every value to the nearest 8-bit displayable level so that storing
/// the pattern as PNG is lossless.
LightFrame quantize_light(const LightFrame& light, float max_radiance);

/// Rec. 709 luminance of a linear RGB triple.
inline double luminance(double r, double g, double b) {
    return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

}  // namespace deskstage::imaging
