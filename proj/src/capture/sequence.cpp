#include "deskstage/capture/sequence.hpp"

#include "deskstage/capture/lights.hpp"

namespace deskstage::capture {

std::vector<std::size_t> CaptureSequence::training_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = active.begin; i < active.end && i < frames.size(); ++i) {
        if (test && test->contains(i)) continue;
        out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> CaptureSequence::test_indices() const {
    std::vector<std::size_t> out;
    if (!test) return out;
    for (std::size_t i = test->begin; i < test->end && i < frames.size(); ++i) out.push_back(i);
    return out;
}

CaptureSequence simulate_sequence(const SceneConfig& scene, const HeadProxy& head,
                                  const PoseTrack& track,
                                  const std::vector<imaging::LightFrame>& lights) {
    if (lights.empty()) throw CaptureError("simulate_sequence needs at least one light frame");
    if (track.size() < lights.size()) {
        throw CaptureError("pose track has " + std::to_string(track.size()) +
                           " poses for " + std::to_string(lights.size()) + " light frames");
    }
    CaptureSequence seq;
    seq.linear = !scene.gamma_applied;
    seq.max_radiance = static_cast<float>(scene.max_radiance);
    seq.active = {0, lights.size()};
    seq.frames.reserve(lights.size());

    std::optional<Transport> transport;
    const RigidPose* cached_pose = nullptr;
    for (std::size_t i = 0; i < lights.size(); ++i) {
        const RigidPose& pose = track[i];
        const bool reuse = cached_pose && cached_pose->rotation.coeffs() == pose.rotation.coeffs() &&
                           cached_pose->translation == pose.translation;
        if (!reuse) {
            transport = compute_transport(scene, head, pose);
            cached_pose = &pose;
        }
        auto rendered = render_with_transport(scene, *transport, lights[i], i);
        seq.frames.push_back({lights[i], std::move(rendered.image), std::move(rendered.mask), pose});
    }
    return seq;
}

std::vector<imaging::LightFrame> inject_sync_frames(const std::vector<imaging::LightFrame>& lights,
                                                    float max_radiance) {
    if (lights.empty()) throw CaptureError("inject_sync_frames needs a non-empty list");
    const auto white = white_light(lights.front().width(), lights.front().height(), max_radiance);
    std::vector<imaging::LightFrame> out;
    out.reserve(lights.size() + 2);
    out.push_back(white);
    out.insert(out.end(), lights.begin(), lights.end());
    out.push_back(white);
    return out;
}

}  // namespace deskstage::capture
