#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deskstage/capture/renderer.hpp"
#include "deskstage/capture/scene.hpp"
#include "deskstage/imaging/image.hpp"

namespace deskstage::capture {

/// Half-open index range [begin, end).
struct FrameRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

struct CaptureFrame {
    imaging::LightFrame light;
    imaging::ImageFrame image;
    imaging::Mask mask;
    std::optional<RigidPose> pose;
};

/// Synchronized light/image/mask stream. `active` excludes sync frames;
/// `test`, when present, marks held-back frames lit by test patterns.
struct CaptureSequence {
    std::vector<CaptureFrame> frames;
    double fps = 30.0;
    bool linear = true;
    float max_radiance = 1.0f;
    std::string provenance = "simulated";
    FrameRange active;
    std::optional<FrameRange> test;

    std::size_t size() const { return frames.size(); }
    /// Active frames outside the test range, in order.
    std::vector<std::size_t> training_indices() const;
    /// Frames of the test range, in order (empty when there is none).
    std::vector<std::size_t> test_indices() const;
};

/// Renders frame i with track[i] and lights[i]. Transports are reused while
/// the pose stays identical, so static captures are cheap.
CaptureSequence simulate_sequence(const SceneConfig& scene, const HeadProxy& head,
                                  const PoseTrack& track,
                                  const std::vector<imaging::LightFrame>& lights);

/// Prepend and append one all-white frame at max_radiance.
std::vector<imaging::LightFrame> inject_sync_frames(const std::vector<imaging::LightFrame>& lights,
                                                    float max_radiance);

}  // namespace deskstage::capture
