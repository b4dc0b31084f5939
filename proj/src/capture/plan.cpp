#include "deskstage/capture/plan.hpp"

#include "deskstage/capture/lights.hpp"
#include "deskstage/capture/renderer.hpp"
#include "deskstage/imaging/color.hpp"

namespace deskstage::capture {

void SimulationPlan::validate() const {
    scene.validate();
    if (train_frames == 0) throw CaptureError("plan needs at least one training frame");
    if (motion != "static" && motion != "smooth-random-walk") throw CaptureError("unknown motion '" + motion + "'");
    if (!(amplitude_deg >= 0.0) || !(period_frames > 0.0)) throw CaptureError("invalid motion parameters");
}

namespace {

std::vector<imaging::LightFrame> make_lights(const std::string& kind, const SceneConfig& scene, std::size_t count,
                                             std::uint64_t seed, const SimulationPlan& plan) {
    const int w = scene.light_grid_width;
    const int h = scene.light_grid_height;
    const auto max = static_cast<float>(scene.max_radiance);
    if (kind == "video") return video_like_lights(w, h, count, max, seed);
    if (kind == "random") {
        auto lights = random_lights(w, h, count, max, seed);
        for (auto& l : lights) l = imaging::quantize_light(l, max);
        return lights;
    }
    if (kind == "flicker") return flicker_lights(w, h, count, max, seed);
    if (kind == "directional") return directional_sweep(w, h, count, max, seed);
    if (kind == "ring") {
        return std::vector<imaging::LightFrame>(count, ring_light(w, h, plan.ring_inner, plan.ring_outer, max));
    }
    if (kind == "basis") {
        auto basis = basis_lights(w, h, max, BasisMode::kCellWhite);
        std::vector<imaging::LightFrame> out;
        for (std::size_t i = 0; i < count; ++i) out.push_back(basis[i % basis.size()]);
        return out;
    }
    throw CaptureError("unknown light pattern '" + kind + "'");
}

}  // namespace

CaptureSequence simulate_plan(const SimulationPlan& plan, const HeadProxy& head) {
    plan.validate();
    auto lights = make_lights(plan.train_lights, plan.scene, plan.train_frames, mix_seed(plan.seed, 1), plan);
    if (plan.test_frames > 0) {
        auto test = make_lights(plan.test_lights, plan.scene, plan.test_frames, mix_seed(plan.seed, 2), plan);
        lights.insert(lights.end(), test.begin(), test.end());
    }
    const std::size_t body = lights.size();
    if (plan.sync_frames) lights = inject_sync_frames(lights, static_cast<float>(plan.scene.max_radiance));
    const PoseTrack track = plan.motion == "static"
                                ? PoseTrack::static_track(lights.size())
                                : PoseTrack::smooth_random_walk(lights.size(), plan.amplitude_deg, plan.period_frames,
                                                                mix_seed(plan.seed, 3), plan.translation_m);
    CaptureSequence seq = simulate_sequence(plan.scene, head, track, lights);
    const std::size_t first = plan.sync_frames ? 1 : 0;
    seq.active = {first, first + body};
    if (plan.test_frames > 0) seq.test = FrameRange{first + plan.train_frames, first + body};
    return seq;
}

}  // namespace deskstage::capture
