#pragma once

#include <cstdint>
#include <string>

#include "deskstage/capture/sequence.hpp"

namespace deskstage::capture {

/// Everything needed to script a synthetic capture session: training content,
/// a held-back block of test patterns, head motion and sync flashes.
struct SimulationPlan {
    SceneConfig scene;
    /// "video" | "random" | "flicker" | "basis"
    std::string train_lights = "video";
    std::size_t train_frames = 240;
    /// "directional" | "video" | "ring"; ignored when test_frames == 0.
    std::string test_lights = "directional";
    std::size_t test_frames = 30;
    /// "static" | "smooth-random-walk"
    std::string motion = "smooth-random-walk";
    double amplitude_deg = 10.0;
    double period_frames = 120.0;
    double translation_m = 0.0;
    bool sync_frames = true;
    double ring_inner = 0.3;
    double ring_outer = 0.45;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Frame layout: [white] train... test... [white]. `active` covers the
/// frames between the flashes and `test` the test block.
CaptureSequence simulate_plan(const SimulationPlan& plan, const HeadProxy& head);

}  // namespace deskstage::capture
