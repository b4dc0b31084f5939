#include "deskstage/capture/renderer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "deskstage/imaging/color.hpp"

namespace deskstage::capture {

using Eigen::Vector3d;
using imaging::ImageFrame;
using imaging::LightFrame;

namespace {

constexpr double kShadowOffset = 1e-5;
constexpr double kMinHit = 1e-7;

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    std::size_t part = 0;
};

/// Roots of |(o + t d - c) / a| = 1, ordered; nullopt if the ray misses.
std::optional<std::pair<double, double>> ellipsoid_roots(const Ellipsoid& e, const Vector3d& o,
                                                         const Vector3d& d) {
    const Vector3d os = (o - e.center).cwiseQuotient(e.semi_axes);
    const Vector3d ds = d.cwiseQuotient(e.semi_axes);
    const double a = ds.squaredNorm();
    const double b = 2.0 * os.dot(ds);
    const double c = os.squaredNorm() - 1.0;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Numerically stable quadratic roots.
    const double q = -0.5 * (b + std::copysign(sq, b));
    double t0 = q / a;
    double t1 = q != 0.0 ? c / q : t0;
    if (t0 > t1) std::swap(t0, t1);
    return std::make_pair(t0, t1);
}

Hit first_hit(const HeadProxy& head, const Vector3d& o, const Vector3d& d) {
    Hit best;
    for (std::size_t i = 0; i < head.parts.size(); ++i) {
        const auto roots = ellipsoid_roots(head.parts[i], o, d);
        if (!roots) continue;
        const double t = roots->first > kMinHit ? roots->first : roots->second;
        if (t > kMinHit && t < best.t) best = {t, i};
    }
    return best;
}

bool occluded(const HeadProxy& head, const Vector3d& o, const Vector3d& d, double t_max) {
    for (const auto& part : head.parts) {
        const auto roots = ellipsoid_roots(part, o, d);
        if (!roots) continue;
        if (roots->second <= kMinHit) continue;
        if (roots->first < t_max) return true;
    }
    return false;
}

Vector3d ellipsoid_normal(const Ellipsoid& e, const Vector3d& p) {
    return (p - e.center).cwiseQuotient(e.semi_axes.cwiseProduct(e.semi_axes)).normalized();
}

void check_light(const SceneConfig& scene, const LightFrame& light) {
    if (light.width() != scene.light_grid_width || light.height() != scene.light_grid_height) {
        throw CaptureError("light frame is " + std::to_string(light.width()) + "x" +
                           std::to_string(light.height()) + " but the scene grid is " +
                           std::to_string(scene.light_grid_width) + "x" +
                           std::to_string(scene.light_grid_height));
    }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Transport compute_transport(const SceneConfig& scene, const HeadProxy& head,
                            const RigidPose& pose) {
    scene.validate();
    head.validate();

    const Vector3d head_center = Vector3d(0.0, 0.0, scene.subject_distance_m) + pose.translation;
    if (head_center.z() - head.bounding_radius() <= 0.0) {
        throw CaptureError("degenerate pose: head reaches behind the camera/monitor plane");
    }

    // Work in head-local coordinates; rotations preserve all distances.
    const Eigen::Matrix3d to_local = pose.rotation.toRotationMatrix().transpose();
    const Vector3d camera_local = to_local * (Vector3d::Zero() - head_center);
    const Vector3d monitor_normal_local = to_local * Vector3d::UnitZ();

    const int grid_w = scene.light_grid_width;
    const int grid_h = scene.light_grid_height;
    const int cells = grid_w * grid_h;
    const double cell_w = scene.monitor_width_m / grid_w;
    const double cell_h = scene.monitor_height_m / grid_h;
    const double cell_area = cell_w * cell_h;

    std::vector<Vector3d> emitters_local;
    emitters_local.reserve(static_cast<std::size_t>(cells));
    for (int row = 0; row < grid_h; ++row) {
        for (int col = 0; col < grid_w; ++col) {
            // Row 0 is the top of the screen as the viewer sees it.
            const Vector3d world(-0.5 * scene.monitor_width_m + (col + 0.5) * cell_w,
                                 0.5 * scene.monitor_height_m - (row + 0.5) * cell_h, 0.0);
            emitters_local.push_back(to_local * (world - head_center));
        }
    }

    const int width = scene.camera.width;
    const int height = scene.camera.height;
    const double focal =
        0.5 * width / std::tan(0.5 * scene.camera.hfov_deg * std::numbers::pi / 180.0);
    const double spec_norm =
        head.specular_coeff * (head.specular_exponent + 2.0) / (2.0 * std::numbers::pi);

    Transport out;
    out.width = width;
    out.height = height;
    out.cells = cells;
    out.mask = imaging::Mask(width, height);

    std::vector<float> diffuse_row(static_cast<std::size_t>(cells));
    std::vector<float> specular_row(static_cast<std::size_t>(cells));

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Vector3d dir_world((x + 0.5 - 0.5 * width) / focal,
                                     -(y + 0.5 - 0.5 * height) / focal, 1.0);
            const Vector3d dir = (to_local * dir_world).normalized();
            const Hit hit = first_hit(head, camera_local, dir);
            if (!std::isfinite(hit.t)) continue;

            const Vector3d p = camera_local + hit.t * dir;
            const Vector3d n = ellipsoid_normal(head.parts[hit.part], p);
            const Vector3d view = -dir;
            const Vector3d origin = p + kShadowOffset * n;

            for (int k = 0; k < cells; ++k) {
                const Vector3d to_emitter = emitters_local[k] - p;
                const double r2 = to_emitter.squaredNorm();
                const double r = std::sqrt(r2);
                const Vector3d w = to_emitter / r;
                const double cos_surface = n.dot(w);
                const double cos_emitter = -monitor_normal_local.dot(w);
                float diffuse = 0.0f;
                float specular = 0.0f;
                if (cos_surface > 0.0 && cos_emitter > 0.0 &&
                    !occluded(head, origin, w, r)) {
                    const double geometric = cell_area * cos_surface * cos_emitter / r2;
                    diffuse = static_cast<float>(geometric / std::numbers::pi);
                    if (spec_norm > 0.0) {
                        const Vector3d reflected = 2.0 * cos_surface * n - w;
                        const double lobe = std::max(0.0, reflected.dot(view));
                        specular = static_cast<float>(
                            geometric * spec_norm * std::pow(lobe, head.specular_exponent));
                    }
                }
                diffuse_row[k] = diffuse;
                specular_row[k] = specular;
            }

            const auto albedo = head.albedo_at(p);
            out.mask.set(x, y, true);
            out.pixel_index.push_back(static_cast<std::uint32_t>(y * width + x));
            out.albedo.push_back({static_cast<float>(albedo[0]), static_cast<float>(albedo[1]),
                                  static_cast<float>(albedo[2])});
            out.diffuse.insert(out.diffuse.end(), diffuse_row.begin(), diffuse_row.end());
            out.specular.insert(out.specular.end(), specular_row.begin(), specular_row.end());
        }
    }
    return out;
}

ImageFrame apply_transport(const Transport& transport, const LightFrame& light) {
    if (static_cast<int>(light.pixel_count()) != transport.cells) {
        throw CaptureError("light frame cell count does not match the transport");
    }
    ImageFrame image(transport.width, transport.height);
    auto values = light.data();
    auto out = image.data();
    const std::size_t cells = static_cast<std::size_t>(transport.cells);
    for (std::size_t i = 0; i < transport.visible_count(); ++i) {
        const float* diffuse = transport.diffuse.data() + i * cells;
        const float* specular = transport.specular.data() + i * cells;
        double d[3] = {0.0, 0.0, 0.0};
        double s[3] = {0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < cells; ++k) {
            for (int c = 0; c < 3; ++c) {
                const double l = values[k * 3 + c];
                d[c] += l * diffuse[k];
                s[c] += l * specular[k];
            }
        }
        const std::size_t px = transport.pixel_index[i];
        for (int c = 0; c < 3; ++c) {
            out[px * 3 + c] = static_cast<float>(transport.albedo[i][c] * d[c] + s[c]);
        }
    }
    return image;
}

RenderedFrame render_with_transport(const SceneConfig& scene, const Transport& transport,
                                    const LightFrame& light, std::uint64_t frame_index) {
    check_light(scene, light);
    ImageFrame image = apply_transport(transport, light);
    auto out = image.data();

    const bool has_ambient = scene.ambient_radiance[0] > 0.0 || scene.ambient_radiance[1] > 0.0 ||
                             scene.ambient_radiance[2] > 0.0;
    if (has_ambient) {
        for (std::size_t i = 0; i < transport.visible_count(); ++i) {
            const std::size_t px = transport.pixel_index[i];
            for (int c = 0; c < 3; ++c) {
                out[px * 3 + c] += static_cast<float>(scene.ambient_radiance[c] *
                                                      transport.albedo[i][c]);
            }
        }
    }

    if (scene.sensor_noise_sigma > 0.0) {
        std::mt19937_64 rng(mix_seed(scene.rng_seed, frame_index));
        std::normal_distribution<double> noise(0.0, scene.sensor_noise_sigma);
        for (float& v : out) v = static_cast<float>(v + noise(rng));
    }

    if (scene.gamma_applied) image = imaging::encode_frame(image);
    return {std::move(image), transport.mask};
}

RenderedFrame render_frame(const SceneConfig& scene, const HeadProxy& head, const RigidPose& pose,
                           const LightFrame& light, std::uint64_t frame_index) {
    check_light(scene, light);
    return render_with_transport(scene, compute_transport(scene, head, pose), light, frame_index);
}

}  // namespace deskstage::capture
