#include "deskstage/capture/lights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "deskstage/capture/scene.hpp"
#include "deskstage/imaging/color.hpp"

namespace deskstage::capture {

using imaging::LightFrame;

namespace {

void check_grid(int width, int height) {
    if (width <= 0 || height <= 0) throw CaptureError("light grid must be non-empty");
}

using Rgb = std::array<double, 3>;

Rgb random_color(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(rng), u(rng), u(rng)};
}

struct Blob {
    double x, y;    // center in [0,1]^2 screen coordinates
    double vx, vy;  // per-frame drift
    double radius;  // relative to screen height
    Rgb color;
};

struct Shot {
    Rgb top, bottom;  // vertical background gradient
    double tilt;      // horizontal gradient strength
    double gain;
    std::vector<Blob> blobs;
};

Shot random_shot(std::mt19937_64& rng, int blobs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Shot shot;
    shot.top = random_color(rng, 0.0, 0.5);
    shot.bottom = random_color(rng, 0.0, 0.5);
    shot.tilt = u(rng) * 2.0 - 1.0;
    shot.gain = 0.25 + 0.75 * u(rng);
    for (int i = 0; i < blobs; ++i) {
        Blob b;
        b.x = u(rng);
        b.y = u(rng);
        b.vx = (u(rng) - 0.5) * 0.04;
        b.vy = (u(rng) - 0.5) * 0.04;
        b.radius = 0.12 + 0.3 * u(rng);
        b.color = random_color(rng, 0.2, 1.0);
        shot.blobs.push_back(b);
    }
    return shot;
}

LightFrame finish(LightFrame light, float scale, float max_radiance) {
    for (float& v : light.data()) v = std::clamp(v, 0.0f, 1.0f) * scale;
    return imaging::quantize_light(light, max_radiance);
}

}  // namespace

LightFrame white_light(int width, int height, float max_radiance) {
    check_grid(width, height);
    return LightFrame(width, height, max_radiance);
}

std::vector<LightFrame> basis_lights(int width, int height, float radiance, BasisMode mode) {
    check_grid(width, height);
    std::vector<LightFrame> out;
    const int cells = width * height;
    for (int k = 0; k < cells; ++k) {
        if (mode == BasisMode::kCellWhite) {
            LightFrame light(width, height);
            for (int c = 0; c < 3; ++c) light.data()[k * 3 + c] = radiance;
            out.push_back(std::move(light));
        } else {
            for (int c = 0; c < 3; ++c) {
                LightFrame light(width, height);
                light.data()[k * 3 + c] = radiance;
                out.push_back(std::move(light));
            }
        }
    }
    return out;
}

std::vector<LightFrame> random_lights(int width, int height, std::size_t count,
                                      float max_radiance, std::uint64_t seed) {
    check_grid(width, height);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, max_radiance);
    std::vector<LightFrame> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        LightFrame light(width, height);
        for (float& v : light.data()) v = u(rng);
        out.push_back(std::move(light));
    }
    return out;
}

std::vector<LightFrame> video_like_lights(int width, int height, std::size_t count,
                                          float max_radiance, std::uint64_t seed,
                                          const VideoOptions& options) {
    check_grid(width, height);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> shot_length(options.min_shot_frames,
                                                   std::max(options.min_shot_frames,
                                                            options.max_shot_frames));
    const double aspect = static_cast<double>(width) / height;
    const float scale = options.peak_fraction * max_radiance;

    std::vector<LightFrame> out;
    out.reserve(count);
    Shot shot = random_shot(rng, options.blobs);
    int remaining = shot_length(rng);
    for (std::size_t f = 0; f < count; ++f) {
        if (remaining-- <= 0) {
            shot = random_shot(rng, options.blobs);
            remaining = shot_length(rng) - 1;
        }
        LightFrame light(width, height);
        for (int row = 0; row < height; ++row) {
            const double v = (row + 0.5) / height;
            for (int col = 0; col < width; ++col) {
                const double u = (col + 0.5) / width;
                Rgb px{};
                for (int c = 0; c < 3; ++c) {
                    px[c] = (shot.top[c] * (1.0 - v) + shot.bottom[c] * v) *
                            (1.0 + 0.5 * shot.tilt * (u - 0.5));
                }
                for (const auto& b : shot.blobs) {
                    const double dx = (u - b.x) * aspect;
                    const double dy = v - b.y;
                    const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius));
                    for (int c = 0; c < 3; ++c) px[c] += w * b.color[c];
                }
                for (int c = 0; c < 3; ++c) {
                    light.at(col, row, c) = static_cast<float>(px[c] * shot.gain);
                }
            }
        }
        out.push_back(finish(std::move(light), scale, max_radiance));
        for (auto& b : shot.blobs) {
            b.x += b.vx;
            b.y += b.vy;
            if (b.x < 0.0 || b.x > 1.0) b.vx = -b.vx;
            if (b.y < 0.0 || b.y > 1.0) b.vy = -b.vy;
        }
    }
    return out;
}

std::vector<LightFrame> directional_sweep(int width, int height, std::size_t count,
                                          float max_radiance, std::uint64_t seed) {
    check_grid(width, height);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double phase_x = 2.0 * std::numbers::pi * u(rng);
    const double phase_y = 2.0 * std::numbers::pi * u(rng);
    const double period = 24.0 + 24.0 * u(rng);
    const Rgb tint = random_color(rng, 0.55, 1.0);
    const double aspect = static_cast<double>(width) / height;
    const double radius = 0.18;

    std::vector<LightFrame> out;
    out.reserve(count);
    for (std::size_t f = 0; f < count; ++f) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(f) / period;
        const double cx = 0.5 + 0.42 * std::sin(t + phase_x);
        const double cy = 0.5 + 0.38 * std::sin(1.37 * t + phase_y);
        LightFrame light(width, height);
        for (int row = 0; row < height; ++row) {
            for (int col = 0; col < width; ++col) {
                const double dx = ((col + 0.5) / width - cx) * aspect;
                const double dy = (row + 0.5) / height - cy;
                const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
                for (int c = 0; c < 3; ++c) {
                    light.at(col, row, c) = static_cast<float>(0.02 + 0.98 * w * tint[c]);
                }
            }
        }
        out.push_back(finish(std::move(light), max_radiance, max_radiance));
    }
    return out;
}

std::vector<LightFrame> flicker_lights(int width, int height, std::size_t count,
                                       float max_radiance, std::uint64_t seed) {
    VideoOptions options;
    options.min_shot_frames = options.max_shot_frames = static_cast<int>(count) + 1;
    auto frames = video_like_lights(width, height, count, max_radiance, seed, options);
    for (std::size_t i = 1; i < frames.size(); i += 2) {
        for (float& v : frames[i].data()) v *= 0.3f;
        frames[i] = imaging::quantize_light(frames[i], max_radiance);
    }
    return frames;
}

double ring_radius_of_cell(int width, int height, int col, int row) {
    return std::hypot(col + 0.5 - 0.5 * width, row + 0.5 - 0.5 * height) / height;
}

LightFrame ring_light(int width, int height, double inner, double outer, float max_radiance) {
    check_grid(width, height);
    if (!(inner >= 0.0 && inner < outer)) throw CaptureError("ring radii must satisfy 0 <= inner < outer");
    LightFrame light(width, height);
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            const double r = ring_radius_of_cell(width, height, col, row);
            const float v = (r >= inner && r <= outer) ? max_radiance : 0.0f;
            for (int c = 0; c < 3; ++c) light.at(col, row, c) = v;
        }
    }
    return light;
}

}  // namespace deskstage::capture
