#include "deskstage/capture/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace deskstage::capture {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double smoothstep(double edge0, double edge1, double x) {
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

/// Soft elliptical blob weight in the x/y plane, 1 inside and 0 outside.
double blob(double x, double y, double cx, double cy, double rx, double ry) {
    const double d = std::hypot((x - cx) / rx, (y - cy) / ry);
    return 1.0 - smoothstep(0.8, 1.2, d);
}

std::array<double, 3> mix(const std::array<double, 3>& a, const std::array<double, 3>& b,
                          double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

/// Sum of three random sinusoids normalized to peak amplitude 1.
class SmoothSignal {
public:
    SmoothSignal(std::mt19937_64& rng, double period) {
        std::uniform_real_distribution<double> freq(0.5, 1.5);
        std::uniform_real_distribution<double> weight(0.5, 1.0);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        double total = 0.0;
        for (auto& term : terms_) {
            term = {weight(rng), 2.0 * std::numbers::pi * freq(rng) / period, phase(rng)};
            total += term.weight;
        }
        for (auto& term : terms_) term.weight /= total;
    }

    double operator()(double t) const {
        double v = 0.0;
        for (const auto& term : terms_) v += term.weight * std::sin(term.omega * t + term.phase);
        return v;
    }

private:
    struct Term {
        double weight;
        double omega;
        double phase;
    };
    std::array<Term, 3> terms_{};
};

}  // namespace

void SceneConfig::validate() const {
    if (!(subject_distance_m > 0.0)) throw CaptureError("subject_distance_m must be positive");
    if (!(monitor_width_m > 0.0 && monitor_height_m > 0.0)) {
        throw CaptureError("monitor dimensions must be positive");
    }
    if (!(camera.hfov_deg > 10.0 && camera.hfov_deg < 170.0)) {
        throw CaptureError("camera hfov must lie in (10, 170) degrees");
    }
    if (camera.width <= 0 || camera.height <= 0) throw CaptureError("camera size must be positive");
    if (light_grid_width <= 0 || light_grid_height <= 0) {
        throw CaptureError("light grid must be non-empty");
    }
    for (double a : ambient_radiance) {
        if (!(a >= 0.0)) throw CaptureError("ambient radiance must be non-negative");
    }
    if (!(sensor_noise_sigma >= 0.0)) throw CaptureError("sensor noise sigma must be non-negative");
    if (!(max_radiance > 0.0)) throw CaptureError("max_radiance must be positive");
}

double SceneConfig::monitor_hfov_deg() const {
    return 2.0 * std::atan(0.5 * monitor_width_m / subject_distance_m) / kDegToRad;
}

double SceneConfig::monitor_vfov_deg() const {
    return 2.0 * std::atan(0.5 * monitor_height_m / subject_distance_m) / kDegToRad;
}

SceneConfig SceneConfig::paper_scale() {
    SceneConfig cfg;
    cfg.camera.width = 480;
    cfg.camera.height = 320;
    cfg.light_grid_width = 32;
    cfg.light_grid_height = 18;
    return cfg;
}

HeadProxy HeadProxy::default_head() {
    HeadProxy head;
    head.parts = {
        {{0.0, 0.0, 0.0}, {0.09, 0.12, 0.10}},        // skull
        {{0.0, -0.012, -0.095}, {0.014, 0.03, 0.03}},  // nose
        {{0.0, 0.034, -0.084}, {0.058, 0.012, 0.02}},  // brow ridge
    };
    return head;
}

HeadProxy HeadProxy::lambertian_sphere(double radius, std::array<double, 3> albedo) {
    HeadProxy head;
    head.parts = {{Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(radius)}};
    head.albedo_model = AlbedoModel::kUniform;
    head.uniform_albedo = albedo;
    head.specular_coeff = 0.0;
    return head;
}

double HeadProxy::bounding_radius() const {
    double r = 0.0;
    for (const auto& part : parts) r = std::max(r, part.center.norm() + part.semi_axes.maxCoeff());
    return r;
}

std::array<double, 3> HeadProxy::albedo_at(const Eigen::Vector3d& p) const {
    if (albedo_model == AlbedoModel::kUniform) return uniform_albedo;

    const std::array<double, 3> skin{0.62, 0.44, 0.36};
    const std::array<double, 3> hair{0.08, 0.055, 0.04};
    const std::array<double, 3> eye{0.12, 0.10, 0.09};
    const std::array<double, 3> lip{0.58, 0.24, 0.24};
    const std::array<double, 3> cheek{0.68, 0.40, 0.36};

    const double front = smoothstep(0.02, -0.04, p.z());
    std::array<double, 3> c = skin;
    c = mix(c, cheek, front * (blob(p.x(), p.y(), -0.045, -0.025, 0.022, 0.018) +
                               blob(p.x(), p.y(), 0.045, -0.025, 0.022, 0.018)));
    c = mix(c, eye, front * (blob(p.x(), p.y(), -0.032, 0.014, 0.013, 0.008) +
                             blob(p.x(), p.y(), 0.032, 0.014, 0.013, 0.008)));
    c = mix(c, lip, front * blob(p.x(), p.y(), 0.0, -0.066, 0.024, 0.009));

    // Hairline sweeps down toward the back of the head.
    const double hairline = 0.07 - 0.6 * std::max(0.0, p.z() + 0.02);
    c = mix(c, hair, smoothstep(hairline - 0.008, hairline + 0.008, p.y()));

    const double grain = 1.0 + 0.04 * std::sin(90.0 * p.x()) * std::sin(70.0 * p.y());
    for (auto& v : c) v = std::clamp(v * grain, 0.0, 1.0);
    return c;
}

void HeadProxy::validate() const {
    if (parts.empty()) throw CaptureError("head proxy has no geometry");
    for (const auto& part : parts) {
        if ((part.semi_axes.array() <= 0.0).any()) {
            throw CaptureError("ellipsoid semi-axes must be positive");
        }
    }
    for (double a : uniform_albedo) {
        if (!(a >= 0.0 && a <= 1.0)) throw CaptureError("albedo must lie in [0, 1]");
    }
    if (!(specular_coeff >= 0.0 && specular_exponent >= 0.0)) {
        throw CaptureError("specular parameters must be non-negative");
    }
}

double RigidPose::angle_between_deg(const RigidPose& a, const RigidPose& b) {
    return a.rotation.angularDistance(b.rotation) / kDegToRad;
}

RigidPose RigidPose::from_euler_deg(double yaw, double pitch, double roll,
                                    Eigen::Vector3d translation) {
    RigidPose pose;
    pose.rotation = Eigen::AngleAxisd(yaw * kDegToRad, Eigen::Vector3d::UnitY()) *
                    Eigen::AngleAxisd(pitch * kDegToRad, Eigen::Vector3d::UnitX()) *
                    Eigen::AngleAxisd(roll * kDegToRad, Eigen::Vector3d::UnitZ());
    pose.rotation.normalize();
    pose.translation = translation;
    return pose;
}

PoseTrack::PoseTrack(std::vector<RigidPose> poses) : poses_(std::move(poses)) {
    for (std::size_t i = 0; i < poses_.size(); ++i) {
        if (std::abs(poses_[i].rotation.norm() - 1.0) > 1e-9) {
            throw CaptureError("pose " + std::to_string(i) + " has a non-unit quaternion");
        }
        if (i > 0 && RigidPose::angle_between_deg(poses_[i - 1], poses_[i]) >= kMaxStepDeg) {
            throw CaptureError("pose track jumps by more than 5 degrees at frame " +
                               std::to_string(i));
        }
    }
}

PoseTrack PoseTrack::static_track(std::size_t frames) {
    return PoseTrack(std::vector<RigidPose>(frames));
}

PoseTrack PoseTrack::smooth_random_walk(std::size_t frames, double amplitude_deg,
                                        double period_frames, std::uint64_t seed,
                                        double translation_m) {
    if (!(amplitude_deg >= 0.0)) throw CaptureError("amplitude must be non-negative");
    if (!(period_frames > 0.0)) throw CaptureError("period must be positive");
    std::mt19937_64 rng(seed);
    const SmoothSignal yaw(rng, period_frames);
    const SmoothSignal pitch(rng, period_frames);
    const SmoothSignal roll(rng, period_frames);
    const SmoothSignal tx(rng, period_frames);
    const SmoothSignal ty(rng, period_frames);
    const SmoothSignal tz(rng, period_frames);

    std::vector<RigidPose> poses;
    poses.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i);
        poses.push_back(RigidPose::from_euler_deg(
            amplitude_deg * yaw(t), 0.6 * amplitude_deg * pitch(t), 0.3 * amplitude_deg * roll(t),
            translation_m * Eigen::Vector3d(tx(t), ty(t), tz(t))));
    }
    return PoseTrack(std::move(poses));
}

PoseTrack PoseTrack::from_poses(std::vector<RigidPose> poses) {
    for (auto& pose : poses) pose.rotation.normalize();
    return PoseTrack(std::move(poses));
}

}  // namespace deskstage::capture
