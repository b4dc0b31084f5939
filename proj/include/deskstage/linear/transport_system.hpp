#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "deskstage/capture/sequence.hpp"
#include "deskstage/imaging/image.hpp"

namespace deskstage::linear {

class LinearError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stacked lighting matrix (one flattened light frame per column) and image
/// matrix (one flattened camera frame per column). Flattening is row-major,
/// channel-interleaved. The SVD of the lighting matrix is computed once at
/// build time; the object is read-only afterwards.
class TransportSystem {
public:
    TransportSystem(std::span<const imaging::LightFrame> lights,
                    std::span<const imaging::ImageFrame> images);

    const Eigen::MatrixXd& light_matrix() const { return lights_; }
    const Eigen::MatrixXd& image_matrix() const { return images_; }
    std::size_t frame_count() const { return static_cast<std::size_t>(lights_.cols()); }

    int light_width() const { return light_width_; }
    int light_height() const { return light_height_; }
    int image_width() const { return image_width_; }
    int image_height() const { return image_height_; }

    const Eigen::MatrixXd& left_singular_vectors() const { return u_; }
    const Eigen::VectorXd& singular_values() const { return sigma_; }
    const Eigen::MatrixXd& right_singular_vectors() const { return v_; }

    /// Column i of the image matrix reshaped to a frame.
    imaging::ImageFrame image_column(std::size_t i) const;

private:
    int light_width_ = 0;
    int light_height_ = 0;
    int image_width_ = 0;
    int image_height_ = 0;
    Eigen::MatrixXd lights_;
    Eigen::MatrixXd images_;
    Eigen::MatrixXd u_;
    Eigen::VectorXd sigma_;
    Eigen::MatrixXd v_;
};

/// Columns come from seq.frames[range]. Frames must already be linear.
TransportSystem build_transport(const capture::CaptureSequence& seq, capture::FrameRange range);

struct WeightVector {
    Eigen::VectorXd w;
    double residual_norm = 0.0;
    int effective_rank = 0;
};

struct SolveOptions {
    /// Tikhonov weight on ||w||^2.
    double reg = 0.0;
    /// Singular values below cutoff * sigma_max, or below the numerical rank floor, are discarded.
    double cutoff = 1e-4;
};

/// argmin ||L w - target||^2 + reg ||w||^2 through the truncated SVD. With
/// reg = 0 and cutoff = 0 this is the minimum-norm pseudoinverse solution.
WeightVector solve_weights(const TransportSystem& ts, const imaging::LightFrame& target,
                           const SolveOptions& options = {});

/// image_matrix * w, unclamped.
imaging::ImageFrame relight_linear(const TransportSystem& ts, const WeightVector& weights);

/// Display variant of a relit frame with values clamped to [0, 1].
imaging::ImageFrame clamp_for_display(const imaging::ImageFrame& frame);

}  // namespace deskstage::linear
