// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cli_pipeline.hpp"
#include "deskstage/capture/lights.hpp"
#include "deskstage/capture/plan.hpp"
#include "deskstage/capture/renderer.hpp"
#include "deskstage/eval/evaluation.hpp"
#include "deskstage/imaging/metrics.hpp"
#include "deskstage/linear/transport_system.hpp"
#include "deskstage/nn/discriminator.hpp"
#include "deskstage/nn/generator.hpp"
#include "deskstage/pairs/pair_miner.hpp"
#include "deskstage/training/trainer.hpp"
#include "harness.hpp"
#include "support.hpp"

using namespace deskstage;
using autodiff::Tensor;
namespace fs = std::filesystem;

namespace {

constexpr double kLinearRelL2 = 1e-5;
constexpr double kLinearSeconds = 60.0;
constexpr double kMotionGapDb = 5.0;
constexpr double kFdRelative = 1e-4;
constexpr double kFdSeconds = 300.0;
constexpr double kDemodInvariance = 1e-12;
constexpr int kDemodDraws = 1000;
constexpr int kFullScaleReceptiveField = 70;
constexpr std::size_t kMinerFrames = 300;
constexpr double kOverfitL1 = 0.05;
constexpr std::int64_t kOverfitL1Steps = 500;
constexpr std::int64_t kOverfitFullSteps = 2000;
constexpr double kOverfitSeconds = 600.0;
constexpr std::int64_t kGeneralizationSteps = 2000;
constexpr double kGeneralizationGainDb = 3.0;
constexpr std::size_t kGeneralizationMinFrames = 20;
constexpr double kDecompositionTol = 1e-6;
constexpr int kSyncTrials = 100;
constexpr std::int64_t kAblationSteps = 1000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

// Mined pairs over the training frames of a sequence.
pairs::PairIndex mine(const capture::CaptureSequence& seq, double threshold = pairs::kDefaultIouThreshold) {
    const auto ids = seq.training_indices();
    std::vector<imaging::Mask> masks;
    for (auto i : ids) masks.push_back(seq.frames[i].mask);
    return pairs::mine_pairs(masks, threshold, ids);
}

Outcome linear_exactness() {
    const auto t0 = Clock::now();
    capture::SceneConfig scene;
    const auto head = capture::HeadProxy::default_head();
    const std::size_t n = 200;
    const auto lights = capture::random_lights(16, 9, n, 1.0f, 31);
    const auto seq = capture::simulate_sequence(scene, head, capture::PoseTrack::static_track(n), lights);
    const auto ts = linear::build_transport(seq, {0, n});
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd mix(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < mix.size(); ++i) mix(i) = u(rng);
    mix /= mix.sum();
    const Eigen::VectorXd target_vec = ts.light_matrix() * mix;
    imaging::LightFrame target(16, 9);
    for (std::size_t i = 0; i < target.value_count(); ++i) target.data()[i] = static_cast<float>(target_vec(i));
    const auto relit = linear::relight_linear(ts, linear::solve_weights(ts, target, {0.0, 0.0}));
    const auto truth = capture::render_frame(scene, head, capture::RigidPose{}, target).image;
    const double err = imaging::relative_l2(relit, truth);
    const double secs = seconds_since(t0);
    return {err < kLinearRelL2 && secs < kLinearSeconds,
            fmt("relative L2 %.3g (limit %.0e), %.1f s (limit %.0f s), 200 frames at 120x80", err, kLinearRelL2,
                secs, kLinearSeconds)};
}

// Pooled PSNR of the linear model over the test block of a plan.
double linear_psnr(const std::string& motion) {
    capture::SimulationPlan plan;
    plan.train_lights = "random";
    plan.train_frames = 480;
    plan.test_frames = 20;
    plan.sync_frames = false;
    plan.motion = motion;
    const auto seq = capture::simulate_plan(plan, capture::HeadProxy::default_head());
    const auto ts = linear::build_transport(seq, {0, plan.train_frames});
    double sq = 0.0;
    std::size_t count = 0;
    for (auto t : seq.test_indices()) {
        const auto relit = linear::relight_linear(ts, linear::solve_weights(ts, seq.frames[t].light, {0.0, 0.0}));
        sq += imaging::mse(relit, seq.frames[t].image) * static_cast<double>(relit.value_count());
        count += relit.value_count();
    }
    return 10.0 * std::log10(1.0 / std::max(sq / static_cast<double>(count), 1e-30));
}

Outcome linear_motion_failure() {
    const double still = linear_psnr("static");
    const double moving = linear_psnr("smooth-random-walk");
    return {still - moving >= kMotionGapDb,
            fmt("static %.1f dB, moving (+-10 deg) %.1f dB, gap %.1f dB (need >= %.0f)", still, moving,
                still - moving, kMotionGapDb)};
}

double op_gradient_error() {
    using namespace autodiff;
    using TD = Tensor<double>;
    using test::project;
    std::mt19937_64 rng(5);
    auto r = [&](Shape s, double lo = -1.0, double hi = 1.0) { return test::random_tensor(std::move(s), rng, lo, hi); };
    auto a = r({2, 3, 4, 4}), b = r({2, 3, 4, 4}), bias3 = r({3}), w = r({4, 3, 3, 3}), w4 = r({2, 3, 4, 4});
    auto cb = r({4}), s = r({3}, 0.5, 2.0), v = r({2, 6}), fw = r({5, 6}), fb = r({5});
    auto slopes = r({3}, 0.05, 0.5), code = r({1, 5});
    for (double& x : a.mutable_data())
        if (std::abs(x) < 0.05) x += 0.1;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (std::abs(a.data()[i] - b.data()[i]) < 0.05) b.mutable_data()[i] += 0.1;
    double worst = 0.0;
    auto fd = [&](const std::function<TD()>& fn, std::vector<TD> in) {
        worst = std::max(worst, test::gradient_check(fn, std::move(in)));
    };
    fd([&] { return project(add(a, b)); }, {a, b});
    fd([&] { return project(sub(a, b)); }, {a, b});
    fd([&] { return project(mul(a, b)); }, {a, b});
    fd([&] { return project(scale(a, 1.7)); }, {a});
    fd([&] { return mean(mul(a, a)); }, {a});
    fd([&] { return project(add_channel_bias(a, bias3)); }, {a, bias3});
    fd([&] { return project(conv2d(a, w, cb, 1, 1)); }, {a, w, cb});
    fd([&] { return project(conv2d(a, w, cb, 2, 1)); }, {a, w, cb});
    fd([&] { return project(conv2d(a, w4, TD{}, 2, 1)); }, {a, w4});
    fd([&] { return project(demodulate(w, s, 1e-8)); }, {w, s});
    fd([&] { return project(bilinear_upsample_2x(a)); }, {a});
    fd([&] { return project(avg_pool_2x(a)); }, {a});
    fd([&] { return project(concat(a, b)); }, {a, b});
    fd([&] { return project(fully_connected(v, fw, fb)); }, {v, fw, fb});
    fd([&] { return project(pixel_norm(a, 1e-8)); }, {a});
    fd([&] { return project(prelu(a, slopes)); }, {a, slopes});
    fd([&] { return project(leaky_relu(a, 0.2)); }, {a});
    fd([&] { return l1(a, b); }, {a, b});
    fd([&] { return mse(a, b); }, {a, b});
    fd([&] { return project(reshape(a, {6, 16})); }, {a});
    fd([&] { return project(broadcast_spatial(code, 3, 2)); }, {code});
    fd([&] { return project(pad_replicate(a, 1, 2, 0, 3)); }, {a});
    fd([&] { return project(crop(a, 1, 0, 2, 3)); }, {a});
    return worst;
}

double generator_gradient_error() {
    nn::GeneratorConfig cfg;
    cfg.light_width = 4;
    cfg.light_height = 3;
    cfg.base_channels = 4;
    cfg.max_channels = 8;
    cfg.encoder_hidden = 16;
    cfg.code_length = 8;
    cfg.mlp_hidden = 8;
    double worst = 0.0;
    for (auto mode : {nn::ConditioningMode::kDemodulation, nn::ConditioningMode::kLatentConcat,
                      nn::ConditioningMode::kNoSourceLight}) {
        for (auto routing : {nn::CodeRouting::kConcatenated, nn::CodeRouting::kPerCode}) {
            cfg.mode = mode;
            cfg.routing = routing;
            nn::Generator<double> g(cfg);
            std::mt19937_64 rng(19);
            auto img = test::random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0);
            auto ls = test::random_tensor({1, 36}, rng, 0.0, 1.0);
            auto lt = test::random_tensor({1, 36}, rng, 0.0, 1.0);
            std::vector<Tensor<double>> inputs = g.params().tensors();
            // Zero-initialized biases put pre-activations exactly on leaky-ReLU kinks.
            std::normal_distribution<double> jitter(0.0, 0.05);
            for (auto& t : inputs)
                for (double& v : t.mutable_data()) v += jitter(rng);
            inputs.insert(inputs.end(), {img, lt});
            if (mode != nn::ConditioningMode::kNoSourceLight) inputs.push_back(ls);
            worst = std::max(worst, test::gradient_check([&] { return test::project(g.relight(img, ls, lt)); },
                                                         inputs, 1e-6, 1e-3, 6));
        }
    }
    return worst;
}

double discriminator_gradient_error() {
    auto cfg = nn::DiscriminatorConfig::toy(12, 16);
    for (auto& l : cfg.layers) l.out_channels = std::min(l.out_channels, 4);
    cfg.layers.back().out_channels = 1;
    nn::Discriminator<double> d(cfg);
    std::mt19937_64 rng(21);
    auto img = test::random_tensor({1, 3, 16, 12}, rng, 0.0, 1.0);
    std::vector<Tensor<double>> inputs = d.params().tensors();
    inputs.push_back(img);
    return test::gradient_check([&] { return test::project(d.forward(img)); }, inputs, 1e-5, 1e-3, 30);
}

Outcome autodiff_correctness() {
    const auto t0 = Clock::now();
    const double ops = op_gradient_error();
    const double gen = generator_gradient_error();
    const double disc = discriminator_gradient_error();
    const double secs = seconds_since(t0);
    const double worst = std::max({ops, gen, disc});
    return {worst < kFdRelative && secs < kFdSeconds,
            fmt("worst relative error: ops %.2g, toy generator %.2g, toy discriminator %.2g (limit 1e-4); %.1f s",
                ops, gen, disc, secs)};
}

Outcome demodulation_invariance() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> log_c(std::log(1e-3), std::log(1e3));
    std::uniform_int_distribution<int> dim(1, 6);
    double worst = 0.0;
    for (int trial = 0; trial < kDemodDraws; ++trial) {
        const int o = dim(rng), i = dim(rng);
        const auto w = test::random_tensor({o, i, 3, 3}, rng, -1, 1, false);
        const auto s = test::random_tensor({i}, rng, 0.1, 3.0, false);
        const double c = std::exp(log_c(rng));
        const auto base = autodiff::demodulate(w, s, 0.0);
        const auto scaled = autodiff::demodulate(w, autodiff::scale(s, c), 0.0);
        for (std::size_t k = 0; k < base.size(); ++k) {
            worst = std::max(worst, std::abs(base.data()[k] - scaled.data()[k]));
        }
    }
    const int rf = nn::Discriminator<float>(nn::DiscriminatorConfig::paper_scale(256, 256)).receptive_field();
    return {worst < kDemodInvariance && rf == kFullScaleReceptiveField,
            fmt("max deviation %.2g over %.0f draws (limit 1e-12); full-scale discriminator receptive field %.0f",
                worst, kDemodDraws, rf)};
}

Outcome pair_miner_equivalence() {
    std::size_t checked = 0;
    bool ok = true;
    for (std::uint64_t seed : {41, 42}) {
        capture::SceneConfig scene;
        scene.camera.width = 60;
        scene.camera.height = 40;
        const auto track = capture::PoseTrack::smooth_random_walk(kMinerFrames, 10.0, 60.0, seed);
        const auto seq = capture::simulate_sequence(scene, capture::HeadProxy::default_head(), track,
                                                    std::vector(kMinerFrames, capture::white_light(16, 9, 0.5f)));
        std::vector<imaging::Mask> masks;
        for (const auto& f : seq.frames) masks.push_back(f.mask);
        std::set<std::pair<std::size_t, std::size_t>> previous;
        bool first = true;
        for (double t : {0.8, 0.85, 0.9, 0.92, 0.95}) {
            std::set<std::pair<std::size_t, std::size_t>> brute;
            for (std::size_t i = 0; i < masks.size(); ++i)
                for (std::size_t j = 0; j < masks.size(); ++j)
                    if (i != j && pairs::mask_iou(masks[i], masks[j]) >= t) brute.insert({i, j});
            std::set<std::pair<std::size_t, std::size_t>> mined;
            for (const auto& p : pairs::mine_pairs(masks, t).pairs) mined.insert({p.source, p.target});
            ok = ok && mined == brute;
            if (!first) ok = ok && std::includes(previous.begin(), previous.end(), mined.begin(), mined.end());
            previous = mined;
            first = false;
            checked += brute.size();
        }
    }
    return {ok, fmt("2 sequences x %.0f frames, 5 thresholds, %.0f brute-force pairs matched, nested as threshold "
                    "rises",
                    kMinerFrames, static_cast<double>(checked))};
}

struct PairBatches {
    capture::CaptureSequence seq;
    pairs::PairIndex pairs;
};

PairBatches eight_pairs() {
    capture::SimulationPlan plan;
    PairBatches out;
    out.seq = capture::simulate_plan(plan, capture::HeadProxy::default_head());
    const auto all = mine(out.seq);
    const std::size_t stride = all.pairs.size() / 8;
    for (std::size_t k = 0; k < 8; ++k) out.pairs.pairs.push_back(all.pairs[k * stride]);
    return out;
}

training::LossReport mean_report(const training::TrainingSession& s, const PairBatches& d) {
    training::LossReport m;
    for (const auto& p : d.pairs.pairs) {
        const auto r = s.evaluate(training::make_batch(d.seq, p.source, p.target, s.config().crop));
        m.l1 += r.l1 / 8.0;
        m.total_g += r.total_g / 8.0;
    }
    return m;
}

Outcome overfit() {
    const auto t0 = Clock::now();
    const auto data = eight_pairs();
    const auto& light = data.seq.frames.front().light;

    training::TrainConfig l1cfg;
    l1cfg.use_perceptual = l1cfg.use_cycle = l1cfg.use_adversarial = false;
    l1cfg.steps = kOverfitL1Steps;
    const double l1_before =
        mean_report(training::TrainingSession(l1cfg, light.width(), light.height(), data.seq.max_radiance), data).l1;
    const double l1_after = mean_report(training::train(data.seq, data.pairs, l1cfg), data).l1;

    training::TrainConfig full;
    full.steps = kOverfitFullSteps;
    const double total_before =
        mean_report(training::TrainingSession(full, light.width(), light.height(), data.seq.max_radiance), data)
            .total_g;
    bool finite = true;
    double total_after = std::numeric_limits<double>::quiet_NaN();
    try {
        const auto s = training::train(data.seq, data.pairs, full);
        for (const auto& row : s.log) finite = finite && std::isfinite(row.losses.total_g);
        total_after = mean_report(s, data).total_g;
    } catch (const training::TrainingError&) {
        finite = false;
    }
    const double secs = seconds_since(t0);
    const bool ok = l1_after < kOverfitL1 && l1_after < l1_before && finite && total_after < total_before &&
                    secs < kOverfitSeconds;
    return {ok, fmt("L1-only: %.4f -> %.4f (limit 0.05); full loss: total %.4f -> %.4f, no NaN; ", l1_before,
                    l1_after, total_before, total_after) +
                    fmt("%.0f s (limit 600 s)", secs)};
}

Outcome generalization() {
    capture::SimulationPlan plan;
    const auto seq = capture::simulate_plan(plan, capture::HeadProxy::default_head());
    training::TrainConfig cfg;
    cfg.steps = kGeneralizationSteps;
    auto session = std::make_shared<const training::TrainingSession>(training::train(seq, mine(seq), cfg));
    const eval::PerceptualProxy proxy;
    const auto neural = eval::eval_protocol1(seq, eval::NeuralRelighter(session), proxy);
    const auto copy = eval::eval_protocol1(seq, eval::CopyInputRelighter{}, proxy);
    const double gain = neural.mean_psnr - copy.mean_psnr;
    return {gain >= kGeneralizationGainDb && neural.frames.size() >= kGeneralizationMinFrames,
            fmt("neural %.2f dB vs copy-input %.2f dB, gain %.2f dB (need >= 3) on %.0f unseen directional frames",
                neural.mean_psnr, copy.mean_psnr, gain, static_cast<double>(neural.frames.size()))};
}

Outcome ablation_isolation() {
    const auto data = eight_pairs();
    const auto& light = data.seq.frames.front().light;
    training::TrainConfig base;
    const auto& p = data.pairs.pairs.front();
    const auto batch = training::make_batch(data.seq, p.source, p.target, base.crop);
    auto session = [&](const training::TrainConfig& c) {
        return training::TrainingSession(c, light.width(), light.height(), data.seq.max_radiance);
    };
    const auto full = session(base).evaluate(batch);
    auto decomposes = [&](const training::LossReport& r) {
        const double sum = base.lambda_l1 * r.l1 + base.lambda_p * r.perceptual + base.lambda_c * r.cycle +
                           base.lambda_d * r.adv_g;
        return std::abs(sum - r.total_g) < kDecompositionTol;
    };
    bool ok = decomposes(full) && full.perceptual > 0 && full.cycle > 0 && full.adv_g > 0;
    int removed = 0;
    for (int flag = 0; flag < 3; ++flag) {
        auto c = base;
        (flag == 0 ? c.use_perceptual : flag == 1 ? c.use_cycle : c.use_adversarial) = false;
        const auto r = session(c).evaluate(batch);
        const double terms[3] = {r.perceptual, r.cycle, r.adv_g};
        const double ref[3] = {full.perceptual, full.cycle, full.adv_g};
        bool only_one = r.l1 == full.l1 && terms[flag] == 0.0;
        for (int k = 0; k < 3; ++k)
            if (k != flag) only_one = only_one && terms[k] == ref[k];
        ok = ok && only_one && decomposes(r);
        removed += only_one;
    }
    auto no_src = base;
    no_src.use_source_light = false;
    const auto s = session(no_src);
    autodiff::NoGradGuard guard;
    const auto& g = s.generator();
    const auto other = Tensor<float>::full(batch.light_s.shape(), 0.5f);
    const auto out_a = g.relight(batch.source, batch.light_s, batch.light_t);
    const auto out_b = g.relight(batch.source, other, batch.light_t);
    const bool ignores_source = std::ranges::equal(out_a.data(), out_b.data());
    const auto with_src = session(base).generator().relight(batch.source, batch.light_s, batch.light_t);
    const bool changes_output = !std::ranges::equal(with_src.data(), out_a.data());
    ok = ok && ignores_source && changes_output;
    return {ok, fmt("%.0f/3 flags remove exactly their own term, totals decompose within 1e-6; ", removed) +
                    (ignores_source ? "w/o source light ignores L_s" : "w/o source light still reads L_s") +
                    (changes_output ? " and changes outputs" : " but outputs are unchanged")};
}

// Protocol 1 perceptual-proxy scores per ablation, compared against the reference ordering
// full < no-source-light < no-perceptual < no-cycle < no-adversarial.
std::string ablation_ordering() {
    capture::SimulationPlan plan;
    const auto seq = capture::simulate_plan(plan, capture::HeadProxy::default_head());
    const auto pairs = mine(seq);
    const eval::PerceptualProxy proxy;
    const std::vector<std::string> names = {"full", "no-source-light", "no-perceptual", "no-cycle",
                                            "no-adversarial"};
    std::vector<double> scores;
    for (std::size_t v = 0; v < names.size(); ++v) {
        training::TrainConfig cfg;
        cfg.steps = kAblationSteps;
        cfg.use_source_light = v != 1;
        cfg.use_perceptual = v != 2;
        cfg.use_cycle = v != 3;
        cfg.use_adversarial = v != 4;
        auto session = std::make_shared<const training::TrainingSession>(training::train(seq, pairs, cfg));
        scores.push_back(eval::eval_protocol1(seq, eval::NeuralRelighter(session), proxy).mean_perceptual);
    }
    std::ostringstream out;
    out.precision(4);
    int agree = 0, total = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << (i ? ", " : "") << names[i] << " " << scores[i];
        for (std::size_t j = i + 1; j < names.size(); ++j, ++total) agree += scores[i] < scores[j];
    }
    out << "; " << agree << "/" << total << " pairs ordered as the reference (" << kAblationSteps
        << " steps each)";
    return out.str();
}

Outcome sync_detection() {
    int exact = 0;
    for (int trial = 0; trial < kSyncTrials; ++trial) exact += test::sync_trial(5000 + trial).ok();
    return {exact == kSyncTrials, fmt("%.0f/%.0f randomized captures recovered exactly", exact, kSyncTrials)};
}

Outcome cli_determinism() {
    const std::string binary = DESKSTAGE_CLI_PATH;
    const test::CliRunner external = [&](const std::vector<std::string>& args) {
        std::string cmd = binary;
        for (const auto& a : args) cmd += " '" + a + "'";
        cmd += " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : 1;
    };
    const auto root = fs::temp_directory_path() / ("deskstage_acceptance_" + std::to_string(::getpid()));
    const auto config = fs::path(DESKSTAGE_CONFIG_DIR) / "smoke.cfg";
    const auto a = test::run_pipeline(external, root, config, "7");
    const auto b = test::run_pipeline(external, root, config, "7");
    fs::remove_all(root);
    if (!a.failed.empty() || !b.failed.empty()) {
        return {false, "command failed: " + (a.failed.empty() ? b.failed : a.failed)};
    }
    std::size_t differing = 0;
    for (const auto& [file, hash] : a.hashes) differing += !b.hashes.count(file) || b.hashes.at(file) != hash;
    return {differing == 0 && a.hashes.size() == b.hashes.size(),
            fmt("8 commands run twice with --seed 7: %.0f output files, %.0f differ",
                static_cast<double>(a.hashes.size()), static_cast<double>(differing))};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"linear-exactness", linear_exactness},
        {"linear-motion-failure", linear_motion_failure},
        {"autodiff-correctness", autodiff_correctness},
        {"demodulation-invariance", demodulation_invariance},
        {"pair-miner-equivalence", pair_miner_equivalence},
        {"overfit", overfit},
        {"generalization", generalization},
        {"ablation-isolation", ablation_isolation},
        {"sync-detection", sync_detection},
        {"cli-determinism", cli_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    try {
        std::cout << "INFO ablation-ordering: " << ablation_ordering() << std::endl;
    } catch (const std::exception& e) {
        std::cout << "INFO ablation-ordering: error: " << e.what() << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
