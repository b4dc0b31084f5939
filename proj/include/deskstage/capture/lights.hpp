#pragma once

#include <cstdint>
#include <vector>

#include "deskstage/imaging/image.hpp"

namespace deskstage::capture {

// Pattern generators for the monitor. Every generator except the raw
// random/basis ones snaps its output to 8-bit display levels, matching what
// a real screen can show and keeping PNG storage lossless.

imaging::LightFrame white_light(int width, int height, float max_radiance);

enum class BasisMode {
    kCellWhite,    // one emitter cell at full white per frame (width*height frames)
    kCellChannel,  // one cell and one channel per frame (3*width*height frames)
};

/// One-light-at-a-time patterns in flattening order.
std::vector<imaging::LightFrame> basis_lights(int width, int height, float radiance,
                                              BasisMode mode);

/// Independent uniform values in [0, max_radiance].
std::vector<imaging::LightFrame> random_lights(int width, int height, std::size_t count,
                                               float max_radiance, std::uint64_t seed);

struct VideoOptions {
    /// Upper bound on any cell relative to max_radiance.
    float peak_fraction = 0.85f;
    int min_shot_frames = 20;
    int max_shot_frames = 70;
    int blobs = 3;
};

/// Video-like content: shots of drifting colored blobs over smooth gradients,
/// separated by hard cuts.
std::vector<imaging::LightFrame> video_like_lights(int width, int height, std::size_t count,
                                                   float max_radiance, std::uint64_t seed,
                                                   const VideoOptions& options = {});

/// A single bright spot sweeping across a dark screen along a Lissajous path,
/// used as unseen directional test lighting.
std::vector<imaging::LightFrame> directional_sweep(int width, int height, std::size_t count,
                                                   float max_radiance, std::uint64_t seed);

/// Alternating bright and dim video content for temporal stability checks.
std::vector<imaging::LightFrame> flicker_lights(int width, int height, std::size_t count,
                                                float max_radiance, std::uint64_t seed);

/// Cell center distance from the screen center in units of the grid height
/// (cells are taken as square).
double ring_radius_of_cell(int width, int height, int col, int row);

/// Bright annulus inner <= r <= outer (radius in grid-height units), dark
/// center and corners.
imaging::LightFrame ring_light(int width, int height, double inner, double outer,
                               float max_radiance);

}  // namespace deskstage::capture
