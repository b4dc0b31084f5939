#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "deskstage/capture/lights.hpp"
#include "deskstage/capture/plan.hpp"
#include "deskstage/capture/renderer.hpp"
#include "deskstage/capture/sequence.hpp"
#include "deskstage/imaging/metrics.hpp"
#include "deskstage/pairs/pair_miner.hpp"
#include "support.hpp"

using namespace deskstage;
using namespace deskstage::capture;
using imaging::ImageFrame;
using imaging::LightFrame;

namespace {

SceneConfig dark_scene() {
    SceneConfig s;
    s.ambient_radiance = {0.0, 0.0, 0.0};
    return s;
}

double max_relative_diff(const ImageFrame& a, const ImageFrame& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.value_count(); ++i) {
        num = std::max(num, std::abs(static_cast<double>(a.values()[i]) - b.values()[i]));
        den = std::max(den, std::abs(static_cast<double>(b.values()[i])));
    }
    return den > 0.0 ? num / den : num;
}

LightFrame single_cell(int w, int h, int col, int row) {
    LightFrame l(w, h);
    for (int c = 0; c < 3; ++c) l.at(col, row, c) = 1.0f;
    return l;
}

}  // namespace

TEST_CASE("default rig geometry spans roughly 100 by 70 degrees") {
    const SceneConfig s;
    CHECK(s.monitor_hfov_deg() == doctest::Approx(100.0).epsilon(0.03));
    CHECK(s.monitor_vfov_deg() == doctest::Approx(70.0).epsilon(0.07));
}

TEST_CASE("scene validation rejects bad parameters") {
    SceneConfig s;
    s.subject_distance_m = 0.0;
    CHECK_THROWS_AS(s.validate(), CaptureError);
    s = SceneConfig{};
    s.camera.hfov_deg = 175.0;
    CHECK_THROWS_AS(s.validate(), CaptureError);
    s = SceneConfig{};
    s.ambient_radiance = {0.0, -0.1, 0.0};
    CHECK_THROWS_AS(s.validate(), CaptureError);
}

TEST_CASE("zero light and zero ambient render black with a nonempty mask") {
    const auto scene = dark_scene();
    const auto out = render_frame(scene, HeadProxy::default_head(), RigidPose{}, LightFrame(16, 9));
    CHECK(out.image.max_value() == 0.0f);
    CHECK(out.mask.count() > 0);
}

TEST_CASE("light grid size must match the scene") {
    CHECK_THROWS_AS(render_frame(SceneConfig{}, HeadProxy::default_head(), RigidPose{}, LightFrame(8, 9)),
                    CaptureError);
}

TEST_CASE("head behind the monitor plane is rejected") {
    RigidPose pose;
    pose.translation = Eigen::Vector3d(0.0, 0.0, -0.25);
    CHECK_THROWS_AS(render_frame(SceneConfig{}, HeadProxy::default_head(), pose, LightFrame(16, 9)), CaptureError);
}

TEST_CASE("transport is linear in the light") {
    const auto scene = dark_scene();
    const auto head = HeadProxy::default_head();
    const auto pose = RigidPose::from_euler_deg(6.0, -3.0, 1.0);
    const auto t = compute_transport(scene, head, pose);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> coef(0.0f, 2.0f);
    for (int trial = 0; trial < 5; ++trial) {
        const auto l1 = test::random_light(16, 9, rng, 0.5f);
        const auto l2 = test::random_light(16, 9, rng, 0.5f);
        const float a = coef(rng), b = coef(rng);
        LightFrame mix(16, 9);
        for (std::size_t i = 0; i < mix.value_count(); ++i) mix.data()[i] = a * l1.values()[i] + b * l2.values()[i];
        const auto i1 = apply_transport(t, l1);
        const auto i2 = apply_transport(t, l2);
        ImageFrame expect(i1.width(), i1.height());
        for (std::size_t i = 0; i < expect.value_count(); ++i) expect.data()[i] = a * i1.values()[i] + b * i2.values()[i];
        CHECK(max_relative_diff(apply_transport(t, mix), expect) < 1e-5);
    }
    const auto l = test::random_light(16, 9, rng, 0.4f);
    LightFrame doubled = l;
    for (float& v : doubled.data()) v *= 2.0f;
    const auto once = render_frame(scene, head, pose, l).image;
    const auto twice = render_frame(scene, head, pose, doubled).image;
    for (std::size_t i = 0; i < once.value_count(); ++i) CHECK(twice.values()[i] == doctest::Approx(2.0f * once.values()[i]).epsilon(1e-6));
}

TEST_CASE("brightening one emitter never darkens a pixel") {
    const auto scene = dark_scene();
    const auto t = compute_transport(scene, HeadProxy::default_head(), RigidPose::from_euler_deg(-4.0, 2.0, 0.0));
    std::mt19937_64 rng(23);
    const auto base = test::random_light(16, 9, rng, 0.5f);
    const auto before = apply_transport(t, base);
    for (int k = 0; k < 144; k += 7) {
        LightFrame brighter = base;
        for (int c = 0; c < 3; ++c) brighter.at(k % 16, k / 16, c) += 0.3f;
        const auto after = apply_transport(t, brighter);
        for (std::size_t i = 0; i < after.value_count(); ++i) REQUIRE(after.values()[i] >= before.values()[i]);
    }
}

TEST_CASE("single lit cell: brightest sphere pixel maximizes the geometric term") {
    auto scene = dark_scene();
    const double radius = 0.1;
    const auto head = HeadProxy::lambertian_sphere(radius, {0.5, 0.5, 0.5});
    const int col = 12, row = 2;
    const auto img = render_frame(scene, head, RigidPose{}, single_cell(16, 9, col, row)).image;

    // Independent shading evaluation: pinhole ray, analytic sphere hit, point
    // emitter at the cell center.
    const double f = 0.5 * scene.camera.width / std::tan(0.5 * scene.camera.hfov_deg * M_PI / 180.0);
    const Eigen::Vector3d center(0.0, 0.0, scene.subject_distance_m);
    const Eigen::Vector3d emitter(-0.5 * scene.monitor_width_m + (col + 0.5) * scene.monitor_width_m / 16,
                                  0.5 * scene.monitor_height_m - (row + 0.5) * scene.monitor_height_m / 9, 0.0);
    std::vector<double> term(static_cast<std::size_t>(img.width() * img.height()), -1.0);
    double best = 0.0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Eigen::Vector3d d =
                Eigen::Vector3d((x + 0.5 - 0.5 * img.width()) / f, -(y + 0.5 - 0.5 * img.height()) / f, 1.0).normalized();
            const double b = d.dot(center);
            const double disc = b * b - center.squaredNorm() + radius * radius;
            if (disc < 0.0) continue;
            const Eigen::Vector3d p = (b - std::sqrt(disc)) * d;
            const Eigen::Vector3d n = (p - center) / radius;
            const Eigen::Vector3d w = emitter - p;
            const double r2 = w.squaredNorm();
            const Eigen::Vector3d wn = w / std::sqrt(r2);
            const double g = std::max(0.0, n.dot(wn)) * std::max(0.0, -wn.z()) / r2;
            term[static_cast<std::size_t>(y * img.width() + x)] = g;
            best = std::max(best, g);
        }
    }
    int bx = 0, by = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (img.at(x, y, 0) > img.at(bx, by, 0)) bx = x, by = y;
    REQUIRE(best > 0.0);
    CHECK(term[static_cast<std::size_t>(by * img.width() + bx)] == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("static track with identical lights gives identical frames") {
    const auto lights = std::vector<LightFrame>(4, white_light(16, 9, 0.6f));
    const auto seq = simulate_sequence(SceneConfig{}, HeadProxy::default_head(), PoseTrack::static_track(4), lights);
    REQUIRE(seq.size() == 4);
    for (std::size_t i = 1; i < 4; ++i) CHECK(seq.frames[i].image == seq.frames[0].image);
}

TEST_CASE("basis lights on a static track reproduce per-cell renders") {
    const auto scene = dark_scene();
    const auto head = HeadProxy::default_head();
    const auto basis = basis_lights(16, 9, 1.0f, BasisMode::kCellWhite);
    REQUIRE(basis.size() == 144);
    const auto seq = simulate_sequence(scene, head, PoseTrack::static_track(basis.size()), basis);
    ImageFrame total(120, 80);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        for (std::size_t i = 0; i < total.value_count(); ++i) total.data()[i] += seq.frames[k].image.values()[i];
    }
    for (std::size_t k : {0u, 37u, 80u, 143u}) {
        CHECK(seq.frames[k].image == render_frame(scene, head, RigidPose{}, basis[k]).image);
    }
    const auto white = render_frame(scene, head, RigidPose{}, white_light(16, 9, 1.0f)).image;
    CHECK(max_relative_diff(total, white) < 1e-5);
}

TEST_CASE("track must cover every light") {
    CHECK_THROWS_AS(simulate_sequence(SceneConfig{}, HeadProxy::default_head(), PoseTrack::static_track(2),
                                      std::vector<LightFrame>(3, LightFrame(16, 9))),
                    CaptureError);
}

TEST_CASE("moving track changes the mask and stays continuous") {
    const auto track = PoseTrack::smooth_random_walk(60, 10.0, 30.0, 5);
    const auto seq = simulate_sequence(SceneConfig{}, HeadProxy::default_head(), track,
                                       std::vector<LightFrame>(60, white_light(16, 9, 0.5f)));
    CHECK(pairs::mask_iou(seq.frames.front().mask, seq.frames.back().mask) < 1.0);
    for (std::size_t i = 1; i < track.size(); ++i) {
        CHECK(RigidPose::angle_between_deg(track[i - 1], track[i]) < PoseTrack::kMaxStepDeg);
        CHECK(std::abs(track[i].rotation.norm() - 1.0) < 1e-12);
        const double a = static_cast<double>(seq.frames[i - 1].mask.count());
        const double b = static_cast<double>(seq.frames[i].mask.count());
        CHECK(std::abs(a - b) / a < 0.10);
    }
}

TEST_CASE("sync frame injection") {
    const std::vector<LightFrame> lights(5, LightFrame(16, 9, 0.2f));
    const auto out = inject_sync_frames(lights, 1.0f);
    REQUIRE(out.size() == 7);
    CHECK(out.front() == white_light(16, 9, 1.0f));
    CHECK(out.back() == white_light(16, 9, 1.0f));
    CHECK(out[3] == lights[2]);
    CHECK(inject_sync_frames(out, 1.0f).size() == 9);
    CHECK_THROWS_AS(inject_sync_frames({}, 1.0f), CaptureError);
}

TEST_CASE("pattern generators stay inside the displayable range") {
    for (const auto& l : video_like_lights(16, 9, 50, 1.0f, 3)) CHECK_NOTHROW(imaging::validate_light(l, 1.0f));
    for (const auto& l : directional_sweep(16, 9, 20, 1.0f, 3)) CHECK_NOTHROW(imaging::validate_light(l, 1.0f));
    for (const auto& l : random_lights(16, 9, 5, 1.0f, 3)) CHECK_NOTHROW(imaging::validate_light(l, 1.0f));
    CHECK(video_like_lights(16, 9, 30, 1.0f, 8) == video_like_lights(16, 9, 30, 1.0f, 8));
}

TEST_CASE("ring light matches an annulus membership test per cell") {
    const auto ring = ring_light(16, 9, 0.3, 0.45, 1.0f);
    int lit = 0;
    for (int row = 0; row < 9; ++row) {
        for (int col = 0; col < 16; ++col) {
            // Cell centers on a square grid, distances in grid heights.
            const double dx = (col + 0.5) - 8.0;
            const double dy = (row + 0.5) - 4.5;
            const double r = std::sqrt(dx * dx + dy * dy) / 9.0;
            const bool inside = r >= 0.3 && r <= 0.45;
            lit += inside;
            for (int c = 0; c < 3; ++c) CHECK(ring.at(col, row, c) == (inside ? 1.0f : 0.0f));
        }
    }
    CHECK(lit > 0);
    CHECK(ring.at(7, 4, 0) == 0.0f);
    CHECK(ring.at(0, 0, 0) == 0.0f);
}

TEST_CASE("simulation plan layout") {
    SimulationPlan plan;
    plan.train_frames = 12;
    plan.test_frames = 4;
    plan.motion = "static";
    const auto seq = simulate_plan(plan, HeadProxy::default_head());
    REQUIRE(seq.size() == 18);
    CHECK(seq.active == FrameRange{1, 17});
    REQUIRE(seq.test.has_value());
    CHECK(*seq.test == FrameRange{13, 17});
    CHECK(seq.training_indices().size() == 12);
    CHECK(seq.test_indices().front() == 13);
    plan.motion = "spin";
    CHECK_THROWS_AS(simulate_plan(plan, HeadProxy::default_head()), CaptureError);
}
