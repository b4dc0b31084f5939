#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Geometry>

namespace deskstage::capture {

class CaptureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CameraConfig {
    double hfov_deg = 80.0;
    int width = 120;
    int height = 80;
};

/// Physical layout of the desk rig. The monitor lies in the z = 0 plane,
/// centered at the origin and emitting toward +z; the pinhole camera sits at
/// the monitor center looking along +z; the head center rests at
/// (0, 0, subject_distance_m) in its neutral pose.
struct SceneConfig {
    double monitor_width_m = 0.70;
    double monitor_height_m = 0.39;
    double subject_distance_m = 0.30;
    CameraConfig camera;
    int light_grid_width = 16;
    int light_grid_height = 9;
    std::array<double, 3> ambient_radiance{0.01, 0.01, 0.01};
    double sensor_noise_sigma = 0.0;
    bool gamma_applied = false;
    double max_radiance = 1.0;
    std::uint64_t rng_seed = 0;

    void validate() const;

    /// Full angular extent of the monitor seen from the neutral head center.
    double monitor_hfov_deg() const;
    double monitor_vfov_deg() const;

    /// Paper-scale rig: 480x320 camera, 32x18 emitter grid.
    static SceneConfig paper_scale();
};

/// Axis-aligned ellipsoid in head-local coordinates (x right, y up, z away
/// from the monitor; the face looks toward -z).
struct Ellipsoid {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d semi_axes = Eigen::Vector3d::Constant(0.1);
};

enum class AlbedoModel { kProcedural, kUniform };

/// Union of ellipsoids with a Lambertian + Phong reflectance.
struct HeadProxy {
    std::vector<Ellipsoid> parts;
    AlbedoModel albedo_model = AlbedoModel::kProcedural;
    std::array<double, 3> uniform_albedo{0.6, 0.45, 0.38};
    double specular_coeff = 0.04;
    double specular_exponent = 16.0;

    /// 0.18 x 0.24 x 0.20 m skull with nose and brow protrusions.
    static HeadProxy default_head();
    /// Single Lambertian sphere with uniform albedo, no specular lobe.
    static HeadProxy lambertian_sphere(double radius, std::array<double, 3> albedo);

    /// Radius of a sphere about the head center containing every part.
    double bounding_radius() const;
    /// Reflectance at a head-local surface point, each channel in [0, 1].
    std::array<double, 3> albedo_at(const Eigen::Vector3d& local_point) const;

    void validate() const;
};

/// Rigid head motion about the neutral head center.
struct RigidPose {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    /// Angle in degrees of the relative rotation between two poses.
    static double angle_between_deg(const RigidPose& a, const RigidPose& b);
    /// Build from yaw (about y), pitch (about x), roll (about z), in degrees.
    static RigidPose from_euler_deg(double yaw, double pitch, double roll,
                                    Eigen::Vector3d translation = Eigen::Vector3d::Zero());
};

class PoseTrack {
public:
    static constexpr double kMaxStepDeg = 5.0;

    static PoseTrack static_track(std::size_t frames);
    /// Smooth band-limited random motion: yaw within +-amplitude, pitch within
    /// 60% and roll within 30% of it, translation within +-translation_m.
    static PoseTrack smooth_random_walk(std::size_t frames, double amplitude_deg,
                                        double period_frames, std::uint64_t seed,
                                        double translation_m = 0.0);
    static PoseTrack from_poses(std::vector<RigidPose> poses);

    std::size_t size() const { return poses_.size(); }
    const RigidPose& operator[](std::size_t i) const { return poses_[i]; }
    const std::vector<RigidPose>& poses() const { return poses_; }

private:
    explicit PoseTrack(std::vector<RigidPose> poses);
    std::vector<RigidPose> poses_;
};

}  // namespace deskstage::capture
