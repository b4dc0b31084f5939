#pragma once

#include <cstdint>
#include <vector>

#include "deskstage/capture/scene.hpp"
#include "deskstage/imaging/image.hpp"

namespace deskstage::capture {

/// Per-pixel linear response of the camera to every emitter cell for one
/// fixed pose. Pixel value for channel c is
///   sum_k light[k][c] * (albedo[c] * diffuse[k] + specular[k]) + ambient[c] * albedo[c].
struct Transport {
    int width = 0;
    int height = 0;
    int cells = 0;
    std::vector<std::uint32_t> pixel_index;       // y * width + x of each visible pixel
    std::vector<std::array<float, 3>> albedo;     // per visible pixel
    std::vector<float> diffuse;                   // visible pixel major, cells minor
    std::vector<float> specular;                  // same layout as diffuse
    imaging::Mask mask;

    std::size_t visible_count() const { return pixel_index.size(); }
};

/// Ray-casts the head under `pose` and evaluates the near-field emitter
/// response of each visible pixel, including cast shadows.
Transport compute_transport(const SceneConfig& scene, const HeadProxy& head,
                            const RigidPose& pose);

/// Noise-free linear image for `light`, without the ambient term.
imaging::ImageFrame apply_transport(const Transport& transport, const imaging::LightFrame& light);

struct RenderedFrame {
    imaging::ImageFrame image;
    imaging::Mask mask;
};

/// Transport + ambient, then sensor noise (seeded by scene.rng_seed and
/// frame_index), then optional sRGB encoding.
RenderedFrame render_frame(const SceneConfig& scene, const HeadProxy& head,
                           const RigidPose& pose, const imaging::LightFrame& light,
                           std::uint64_t frame_index = 0);

/// Same as render_frame but reuses a transport computed for the same pose.
RenderedFrame render_with_transport(const SceneConfig& scene, const Transport& transport,
                                    const imaging::LightFrame& light,
                                    std::uint64_t frame_index = 0);

/// Independent per-frame RNG seed derived from a base seed and an index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace deskstage::capture
