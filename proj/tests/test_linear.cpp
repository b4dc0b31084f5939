#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deskstage/capture/lights.hpp"
#include "deskstage/capture/renderer.hpp"
#include "deskstage/capture/sequence.hpp"
#include "deskstage/imaging/metrics.hpp"
#include "deskstage/linear/transport_system.hpp"
#include "support.hpp"

using namespace deskstage;
using namespace deskstage::linear;
using imaging::ImageFrame;
using imaging::LightFrame;

namespace {

TransportSystem random_system(int n, std::mt19937_64& rng) {
    std::vector<LightFrame> lights;
    std::vector<ImageFrame> images;
    for (int i = 0; i < n; ++i) {
        lights.push_back(test::random_light(16, 9, rng));
        images.push_back(test::random_frame(6, 4, rng));
    }
    return TransportSystem(lights, images);
}

LightFrame from_vector(const Eigen::VectorXd& v, int w, int h) {
    LightFrame l(w, h);
    for (std::size_t i = 0; i < l.value_count(); ++i) l.data()[i] = static_cast<float>(v(static_cast<Eigen::Index>(i)));
    return l;
}

}  // namespace

TEST_CASE("single frame gives one column per matrix in flattening order") {
    std::mt19937_64 rng(1);
    const auto l = test::random_light(16, 9, rng);
    const auto i = test::random_frame(6, 4, rng);
    const TransportSystem ts{std::vector{l}, std::vector{i}};
    CHECK(ts.light_matrix().cols() == 1);
    CHECK(ts.image_matrix().cols() == 1);
    CHECK(ts.light_matrix().rows() == 432);
    CHECK(ts.light_matrix()(3 * (2 * 16 + 5) + 1, 0) == static_cast<double>(l.at(5, 2, 1)));
    CHECK(ts.image_column(0) == i);
}

TEST_CASE("construction errors") {
    std::mt19937_64 rng(2);
    CHECK_THROWS_AS(TransportSystem(std::vector<LightFrame>{}, std::vector<ImageFrame>{}), LinearError);
    CHECK_THROWS_AS(TransportSystem(std::vector{test::random_light(16, 9, rng), test::random_light(8, 9, rng)},
                                    std::vector{test::random_frame(6, 4, rng), test::random_frame(6, 4, rng)}),
                    LinearError);
    capture::CaptureSequence seq;
    CHECK_THROWS_AS(build_transport(seq, {0, 0}), LinearError);
}

TEST_CASE("basis lights give a scaled identity light matrix") {
    capture::SceneConfig scene;
    scene.light_grid_width = 4;
    scene.light_grid_height = 3;
    scene.camera.width = 24;
    scene.camera.height = 16;
    const auto basis = capture::basis_lights(4, 3, 0.5f, capture::BasisMode::kCellChannel);
    const auto seq = capture::simulate_sequence(scene, capture::HeadProxy::default_head(),
                                                capture::PoseTrack::static_track(basis.size()), basis);
    const auto ts = build_transport(seq, {0, seq.size()});
    CHECK(ts.light_matrix().isApprox(0.5 * Eigen::MatrixXd::Identity(36, 36)));
    for (std::size_t i : {0u, 17u, 35u}) CHECK(ts.image_column(i) == seq.frames[i].image);
}

TEST_CASE("identity light matrix returns the target as weights") {
    const auto basis = capture::basis_lights(4, 3, 1.0f, capture::BasisMode::kCellChannel);
    std::vector<ImageFrame> images(basis.size(), ImageFrame(2, 2));
    const TransportSystem ts(basis, images);
    std::mt19937_64 rng(3);
    const auto target = test::random_light(4, 3, rng);
    const auto w = solve_weights(ts, target, {0.0, 0.0});
    for (std::size_t i = 0; i < target.value_count(); ++i) CHECK(w.w(static_cast<Eigen::Index>(i)) == doctest::Approx(target.values()[i]).epsilon(1e-12));
    CHECK(w.effective_rank == 36);
}

TEST_CASE("duplicated columns split the weight evenly") {
    std::mt19937_64 rng(4);
    const auto l = test::random_light(16, 9, rng);
    const auto img = test::random_frame(6, 4, rng);
    const TransportSystem ts{std::vector{l, l}, std::vector{img, img}};
    const auto w = solve_weights(ts, l, {0.0, 0.0});
    CHECK(w.w(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w.w(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w.effective_rank == 1);
}

TEST_CASE("known weights are recovered on a random full-rank system") {
    std::mt19937_64 rng(5);
    const auto ts = random_system(50, rng);
    Eigen::VectorXd truth(50);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < 50; ++i) truth(i) = n(rng);
    const Eigen::VectorXd target = ts.light_matrix() * truth;
    // The target is stored as float, so the oracle solves against the stored values.
    LightFrame tf = from_vector(target, 16, 9);
    const Eigen::VectorXd stored = Eigen::Map<const Eigen::VectorXf>(tf.data().data(), 432).cast<double>();
    const Eigen::VectorXd exact = ts.light_matrix().colPivHouseholderQr().solve(stored);
    const auto w = solve_weights(ts, tf, {0.0, 0.0});
    CHECK((w.w - exact).norm() / exact.norm() < 1e-8);
    CHECK((exact - truth).norm() / truth.norm() < 1e-5);
    CHECK(std::abs(w.residual_norm - (ts.light_matrix() * exact - stored).norm()) < 1e-9);
}

TEST_CASE("relight_linear: one-hot, zero and length errors") {
    std::mt19937_64 rng(6);
    const auto ts = random_system(5, rng);
    WeightVector w;
    w.w = Eigen::VectorXd::Zero(5);
    CHECK(relight_linear(ts, w).max_value() == 0.0f);
    CHECK(relight_linear(ts, w).min_value() == 0.0f);
    w.w(3) = 1.0;
    CHECK(relight_linear(ts, w) == ts.image_column(3));
    w.w = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(relight_linear(ts, w), LinearError);
}

TEST_CASE("solve errors") {
    const std::vector<LightFrame> zero(2, LightFrame(4, 3));
    const std::vector<ImageFrame> imgs(2, ImageFrame(2, 2));
    const TransportSystem ts(zero, imgs);
    CHECK_THROWS_AS(solve_weights(ts, LightFrame(4, 3)), LinearError);
    std::mt19937_64 rng(7);
    const auto good = random_system(3, rng);
    CHECK_THROWS_AS(solve_weights(good, LightFrame(4, 3)), LinearError);
    CHECK_THROWS_AS(solve_weights(good, LightFrame(16, 9), {-1.0, 0.0}), LinearError);
}

TEST_CASE("relighting is linear in the target without regularization") {
    std::mt19937_64 rng(8);
    const auto ts = random_system(30, rng);
    const auto la = test::random_light(16, 9, rng);
    const auto lb = test::random_light(16, 9, rng);
    const double a = 0.7, b = 1.3;
    LightFrame mix(16, 9);
    for (std::size_t i = 0; i < mix.value_count(); ++i) mix.data()[i] = static_cast<float>(a * la.values()[i] + b * lb.values()[i]);
    const SolveOptions exact{0.0, 0.0};
    const auto ra = relight_linear(ts, solve_weights(ts, la, exact));
    const auto rb = relight_linear(ts, solve_weights(ts, lb, exact));
    const auto rm = relight_linear(ts, solve_weights(ts, mix, exact));
    ImageFrame expect(rm.width(), rm.height());
    for (std::size_t i = 0; i < expect.value_count(); ++i) expect.data()[i] = static_cast<float>(a * ra.values()[i] + b * rb.values()[i]);
    CHECK(imaging::relative_l2(rm, expect) < 1e-5);
}

TEST_CASE("weight norm never grows with regularization") {
    std::mt19937_64 rng(9);
    const auto ts = random_system(40, rng);
    const auto target = test::random_light(16, 9, rng);
    double previous = std::numeric_limits<double>::infinity();
    for (double reg : {0.0, 1e-4, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
        const double norm = solve_weights(ts, target, {reg, 0.0}).w.norm();
        CHECK(norm <= previous * (1.0 + 1e-12));
        previous = norm;
    }
}

TEST_CASE("static scene relights an unseen in-span target like the renderer") {
    capture::SceneConfig scene;
    scene.ambient_radiance = {0.0, 0.0, 0.0};
    const auto head = capture::HeadProxy::default_head();
    const auto lights = capture::random_lights(16, 9, 60, 1.0f, 12);
    const auto seq = capture::simulate_sequence(scene, head, capture::PoseTrack::static_track(60), lights);
    const auto ts = build_transport(seq, {0, 60});
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd mix(60);
    for (Eigen::Index i = 0; i < 60; ++i) mix(i) = u(rng);
    mix /= mix.sum();
    const auto target = from_vector(ts.light_matrix() * mix, 16, 9);
    const auto relit = relight_linear(ts, solve_weights(ts, target, {0.0, 0.0}));
    const auto truth = capture::render_frame(scene, head, capture::RigidPose{}, target).image;
    CHECK(imaging::relative_l2(relit, truth) < 1e-5);
}
