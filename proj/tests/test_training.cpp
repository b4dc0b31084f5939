#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "deskstage/autodiff/checkpoint.hpp"
#include "deskstage/autodiff/ops.hpp"
#include "deskstage/capture/plan.hpp"
#include "deskstage/pairs/pair_miner.hpp"
#include "deskstage/training/losses.hpp"
#include "deskstage/training/trainer.hpp"
#include "support.hpp"

using namespace deskstage;
using namespace deskstage::training;
using autodiff::Tensor;
using test::gradient_check;
using test::random_tensor;

namespace {

struct Dataset {
    capture::CaptureSequence seq;
    pairs::PairIndex pairs;
};

/// Short moving-head capture with eight mined pairs.
const Dataset& toy_dataset() {
    static const Dataset data = [] {
        capture::SimulationPlan plan;
        plan.train_frames = 40;
        plan.test_frames = 0;
        plan.train_lights = "random";
        plan.amplitude_deg = 4.0;
        plan.period_frames = 40.0;
        plan.sync_frames = false;
        plan.seed = 5;
        Dataset d;
        d.seq = capture::simulate_plan(plan, capture::HeadProxy::default_head());
        const auto ids = d.seq.training_indices();
        std::vector<imaging::Mask> masks;
        for (auto i : ids) masks.push_back(d.seq.frames[i].mask);
        d.pairs = pairs::mine_pairs(masks, 0.92, ids);
        REQUIRE(d.pairs.pairs.size() >= 8);
        std::vector<pairs::Pair> pick;
        const std::size_t stride = d.pairs.pairs.size() / 8;
        for (std::size_t k = 0; k < 8; ++k) pick.push_back(d.pairs.pairs[k * stride]);
        d.pairs.pairs = pick;
        return d;
    }();
    return data;
}

TrainConfig small_config() {
    TrainConfig c;
    c.base_channels = 8;
    c.steps = 4;
    return c;
}

TrainConfig l1_only(TrainConfig c) {
    c.use_perceptual = c.use_cycle = c.use_adversarial = false;
    return c;
}

Batch first_batch(const TrainConfig& cfg) {
    const auto& d = toy_dataset();
    return make_batch(d.seq, d.pairs.pairs[0].source, d.pairs.pairs[0].target, cfg.crop);
}

TrainingSession fresh_session(const TrainConfig& cfg) {
    const auto& d = toy_dataset();
    const auto& l = d.seq.frames.front().light;
    return TrainingSession(cfg, l.width(), l.height(), d.seq.max_radiance);
}

std::vector<std::vector<float>> snapshot(const nn::ParamSet<float>& p) {
    std::vector<std::vector<float>> out;
    for (const auto& t : p.tensors()) out.emplace_back(t.data().begin(), t.data().end());
    return out;
}

Tensor<double> image_tensor(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_tensor({1, 3, h, w}, rng, 0.0, 1.0, false);
}

}  // namespace

TEST_CASE("config defaults, validation and json round trip") {
    const TrainConfig c;
    CHECK(c.lambda_l1 == 1.0);
    CHECK(c.lambda_p == 0.1);
    CHECK(c.lambda_c == 0.5);
    CHECK(c.lambda_d == 0.1);
    CHECK(c.lr_g == 1e-3);
    CHECK(c.lr_d == 1e-6);
    CHECK(c.batch == 1);
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.lambda_p = -0.1;
    CHECK_THROWS_AS(bad.validate(), TrainingError);
    bad = c;
    bad.lr_d = 0.0;
    CHECK_THROWS_AS(bad.validate(), TrainingError);
    bad = c;
    bad.batch = 2;
    CHECK_THROWS_AS(bad.validate(), TrainingError);

    auto custom = c;
    custom.lambda_c = 0.25;
    custom.use_cycle = false;
    custom.steps = 17;
    custom.mode = nn::ConditioningMode::kLatentConcat;
    custom.crop.dilation = 0.2;
    const auto back = train_config_from_json(to_json(custom));
    CHECK(to_json(back) == to_json(custom));
    CHECK_THROWS(train_config_from_json(R"({"lambda_q": 1})"));
}

TEST_CASE("lr schedule") {
    TrainConfig c;
    c.steps = 10;
    c.lr_decay_start = 1.0;
    for (std::int64_t s = 0; s < 10; ++s) CHECK(c.lr_scale(s) == 1.0);
    c.lr_decay_start = 0.5;
    CHECK(c.lr_scale(4) == 1.0);
    CHECK(c.lr_scale(5) == doctest::Approx(5.0 / 6.0));
    CHECK(c.lr_scale(9) == doctest::Approx(1.0 / 6.0));
    for (std::int64_t s = 5; s < 10; ++s) CHECK(c.lr_scale(s) < c.lr_scale(s - 1) + 1e-15);
}

TEST_CASE("l1 loss") {
    const auto a = image_tensor(5, 7, 1);
    CHECK(loss_l1(a, a).item() == 0.0);
    std::vector<double> shifted(a.data().begin(), a.data().end());
    for (double& v : shifted) v += 0.3;
    CHECK(loss_l1(a, Tensor<double>::from_data(a.shape(), shifted)).item() == doctest::Approx(0.3).epsilon(1e-12));
    const auto b = image_tensor(5, 7, 2);
    double oracle = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) oracle += std::abs(a.data()[i] - b.data()[i]);
    oracle /= static_cast<double>(a.size());
    CHECK(std::abs(loss_l1(a, b).item() - oracle) < 1e-7);
    CHECK_THROWS(loss_l1(a, image_tensor(5, 6, 3)));
}

TEST_CASE("perceptual loss: identity, symmetry, monotone blend, frozen extractor") {
    const FeatureExtractor<double> f(7);
    CHECK(f.scales() == 3);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto a = image_tensor(16, 24, 10 + seed);
        const auto b = image_tensor(16, 24, 20 + seed);
        CHECK(loss_perceptual(a, a, f).item() == 0.0);
        CHECK(loss_perceptual(a, b, f).item() == loss_perceptual(b, a, f).item());
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 5; ++k) {
            const double t = k / 5.0;
            const auto blend = autodiff::add(autodiff::scale(a, 1.0 - t), autodiff::scale(b, t));
            const double v = loss_perceptual(blend, b, f).item();
            CHECK(v < prev);
            prev = v;
        }
        CHECK(prev == 0.0);
    }
    CHECK_THROWS(loss_perceptual(image_tensor(8, 8, 1), image_tensor(8, 6, 1), f));

    const FeatureExtractor<double> same(7), other(8);
    const auto x = image_tensor(12, 12, 3);
    const auto fx = f.features(x), sx = same.features(x), ox = other.features(x);
    for (std::size_t s = 0; s < fx.size(); ++s) {
        CHECK(std::equal(fx[s].data().begin(), fx[s].data().end(), sx[s].data().begin()));
    }
    CHECK_FALSE(std::equal(fx[0].data().begin(), fx[0].data().end(), ox[0].data().begin()));
    for (const auto& w : f.weights()) CHECK_FALSE(w.requires_grad());
}

TEST_CASE("cycle loss with a stub identity generator") {
    const RelightFn<double> identity = [](const Tensor<double>& x, const Tensor<double>&, const Tensor<double>&) {
        return x;
    };
    const auto src = image_tensor(6, 6, 1), pred = image_tensor(6, 6, 2);
    std::mt19937_64 rng(3);
    const auto ls = random_tensor({1, 12}, rng, 0.0, 1.0, false);
    const auto lt = random_tensor({1, 12}, rng, 0.0, 1.0, false);
    CHECK(loss_cycle(src, pred, ls, lt, identity).item() == loss_l1(src, pred).item());
    CHECK(loss_cycle(src, src, ls, ls, identity).item() == 0.0);
    CHECK_THROWS(loss_cycle(src, pred, ls, lt, RelightFn<double>{}));
}

TEST_CASE("cycle loss gradient through both generator applications") {
    std::mt19937_64 rng(11);
    const auto w = random_tensor({3, 3, 3, 3}, rng, -0.3, 0.3);
    const auto bias = random_tensor({3}, rng, -0.1, 0.1);
    const auto proj = random_tensor({3, 4}, rng, -0.5, 0.5);
    const auto src = image_tensor(6, 5, 12);
    const auto ls = random_tensor({1, 4}, rng, 0.0, 1.0, false);
    const auto lt = random_tensor({1, 4}, rng, 0.0, 1.0, false);
    // Conv plus a per-channel shift driven by (to - from) through a learned projection.
    const RelightFn<double> g = [&](const Tensor<double>& x, const Tensor<double>& from, const Tensor<double>& to) {
        const auto shift = autodiff::fully_connected(autodiff::sub(to, from), proj, Tensor<double>::zeros({3}));
        auto y = autodiff::conv2d(x, w, bias, 1, 1);
        y = autodiff::add(y, autodiff::broadcast_spatial(shift, x.dim(2), x.dim(3)));
        return autodiff::leaky_relu(y, 0.2);
    };
    auto loss = [&] {
        const auto pred = g(src, ls, lt);
        return loss_cycle(src, pred, ls, lt, g);
    };
    CHECK(gradient_check(loss, {w, bias, proj}, 1e-6, 1e-4) < 1e-3);
}

TEST_CASE("generator objective decomposes into weighted terms") {
    auto cfg = small_config();
    cfg.lambda_p = 0.3;
    cfg.lambda_c = 0.7;
    cfg.lambda_d = 0.2;
    const auto s = fresh_session(cfg);
    const auto r = s.evaluate(first_batch(cfg));
    CHECK(r.l1 > 0.0);
    CHECK(r.perceptual > 0.0);
    CHECK(r.cycle > 0.0);
    CHECK(r.adv_g > 0.0);
    const double sum = cfg.lambda_l1 * r.l1 + cfg.lambda_p * r.perceptual + cfg.lambda_c * r.cycle +
                       cfg.lambda_d * r.adv_g;
    CHECK(std::abs(r.total_g - sum) < 1e-6);
}

TEST_CASE("each ablation flag removes exactly its own term") {
    const auto base = small_config();
    const auto batch = first_batch(base);
    const auto full = fresh_session(base).evaluate(batch);
    auto eval_with = [&](auto tweak) {
        auto c = base;
        tweak(c);
        return fresh_session(c).evaluate(batch);
    };
    const auto no_p = eval_with([](TrainConfig& c) { c.use_perceptual = false; });
    CHECK(no_p.perceptual == 0.0);
    CHECK(no_p.l1 == full.l1);
    CHECK(no_p.cycle == full.cycle);
    CHECK(no_p.adv_g == full.adv_g);
    const auto no_c = eval_with([](TrainConfig& c) { c.use_cycle = false; });
    CHECK(no_c.cycle == 0.0);
    CHECK(no_c.l1 == full.l1);
    CHECK(no_c.perceptual == full.perceptual);
    CHECK(no_c.adv_g == full.adv_g);
    const auto no_d = eval_with([](TrainConfig& c) { c.use_adversarial = false; });
    CHECK(no_d.adv_g == 0.0);
    CHECK(no_d.l1 == full.l1);
    CHECK(no_d.perceptual == full.perceptual);
    CHECK(no_d.cycle == full.cycle);
    for (const auto* r : {&no_p, &no_c, &no_d}) {
        CHECK(std::abs(r->total_g - (r->l1 + base.lambda_p * r->perceptual + base.lambda_c * r->cycle +
                                     base.lambda_d * r->adv_g)) < 1e-6);
    }

    auto c = base;
    c.use_source_light = false;
    CHECK(c.generator_config(16, 9).mode == nn::ConditioningMode::kNoSourceLight);
    CHECK(base.generator_config(16, 9).mode == nn::ConditioningMode::kDemodulation);
    const auto no_s = fresh_session(c);
    CHECK(no_s.generator().config().mode == nn::ConditioningMode::kNoSourceLight);
    CHECK(no_s.evaluate(batch).l1 != full.l1);
}

TEST_CASE("zero weights leave parameters unchanged; D untouched without adversarial term") {
    auto cfg = small_config();
    cfg.lambda_l1 = cfg.lambda_p = cfg.lambda_c = cfg.lambda_d = 0.0;
    auto s = fresh_session(cfg);
    const auto g0 = snapshot(s.generator().params());
    const auto r = s.generator_step(first_batch(cfg));
    CHECK(r.total_g == 0.0);
    CHECK(snapshot(s.generator().params()) == g0);

    auto off = small_config();
    off.use_adversarial = false;
    auto t = fresh_session(off);
    const auto d0 = snapshot(t.discriminator().params());
    const auto batch = first_batch(off);
    t.generator_step(batch);
    CHECK(t.discriminator_step(batch) == 0.0);
    CHECK(snapshot(t.discriminator().params()) == d0);
    CHECK(snapshot(t.generator().params()) != snapshot(fresh_session(off).generator().params()));
}

TEST_CASE("discriminator step leaves G bit-identical and lowers its loss") {
    auto cfg = small_config();
    cfg.lr_d = 1e-5;
    auto s = fresh_session(cfg);
    const auto batch = first_batch(cfg);
    const auto g0 = snapshot(s.generator().params());
    double prev = std::numeric_limits<double>::infinity();
    double first = 0.0;
    for (int k = 0; k < 50; ++k) {
        const double v = s.discriminator_step(batch);
        if (k == 0) first = v;
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(prev < first);
    CHECK(snapshot(s.generator().params()) == g0);
}

TEST_CASE("discriminator overfits one pair") {
    auto cfg = small_config();
    cfg.lr_d = 1e-4;
    auto s = fresh_session(cfg);
    const auto batch = first_batch(cfg);
    for (int k = 0; k < 2000; ++k) s.discriminator_step(batch);
    autodiff::NoGradGuard guard;
    const auto fake = s.generator().relight(batch.source, batch.light_s, batch.light_t);
    const double real_score = autodiff::mean(s.discriminator().forward(batch.target)).item();
    const double fake_score = autodiff::mean(s.discriminator().forward(fake)).item();
    MESSAGE("real " << real_score << " fake " << fake_score);
    CHECK(real_score > 0.9);
    CHECK(fake_score < 0.1);
}

TEST_CASE("non-finite batch aborts with diagnostics") {
    const auto cfg = small_config();
    auto s = fresh_session(cfg);
    auto batch = first_batch(cfg);
    batch.source.mutable_data()[5] = std::numeric_limits<float>::quiet_NaN();
    try {
        s.generator_step(batch);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("l1=") != std::string::npos);
    }
}

TEST_CASE("pair order is a seeded permutation per pass") {
    for (std::size_t n : {1u, 5u, 13u}) {
        for (std::int64_t pass = 0; pass < 3; ++pass) {
            std::set<std::size_t> seen;
            for (std::int64_t k = 0; k < static_cast<std::int64_t>(n); ++k) {
                seen.insert(pair_for_step(9, pass * static_cast<std::int64_t>(n) + k, n));
            }
            CHECK(seen.size() == n);
            CHECK(*seen.rbegin() == n - 1);
        }
    }
    std::vector<std::size_t> a, b;
    for (std::int64_t k = 0; k < 13; ++k) {
        a.push_back(pair_for_step(9, k, 13));
        b.push_back(pair_for_step(10, k, 13));
    }
    CHECK(a != b);
    CHECK_THROWS_AS(pair_for_step(1, 0, 0), TrainingError);
}

TEST_CASE("crop box covers the dilated mask bounds at the crop aspect") {
    imaging::Mask m(60, 40);
    for (int y = 10; y < 30; ++y)
        for (int x = 20; x < 32; ++x) m.set(x, y, true);
    const CropConfig crop;
    const auto box = crop_box(m, crop);
    // Bounds [20,32)x[10,30) grown 10% to 13.2 x 22 about (26, 20), then widened to 2:3.
    CHECK(box.height() == doctest::Approx(22.0));
    CHECK(box.width() == doctest::Approx(22.0 * 32.0 / 48.0));
    CHECK((box.x0 + box.x1) / 2 == doctest::Approx(26.0));
    CHECK((box.y0 + box.y1) / 2 == doctest::Approx(20.0));
    CHECK_THROWS_AS(crop_box(imaging::Mask(8, 8), crop), TrainingError);

    const auto batch = first_batch(small_config());
    CHECK(batch.source.shape() == autodiff::Shape{1, 3, 48, 32});
    CHECK(batch.target.shape() == autodiff::Shape{1, 3, 48, 32});
    CHECK(batch.light_s.shape() == autodiff::Shape{1, 16 * 9 * 3});
}

TEST_CASE("train: empty pairs, zero steps, determinism and resume") {
    const auto& d = toy_dataset();
    auto cfg = small_config();
    CHECK_THROWS_AS(train(d.seq, pairs::PairIndex{}, cfg), TrainingError);

    cfg.steps = 0;
    const auto zero = train(d.seq, d.pairs, cfg);
    CHECK(snapshot(zero.generator().params()) == snapshot(fresh_session(cfg).generator().params()));
    CHECK(snapshot(zero.discriminator().params()) == snapshot(fresh_session(cfg).discriminator().params()));
    CHECK(zero.log.empty());

    cfg.steps = 12;
    cfg.lr_decay_start = 0.5;
    const auto a = train(d.seq, d.pairs, cfg);
    const auto b = train(d.seq, d.pairs, cfg);
    CHECK(loss_log_csv(a.log) == loss_log_csv(b.log));
    CHECK(snapshot(a.generator().params()) == snapshot(b.generator().params()));

    TrainOptions interrupt;
    interrupt.stop_at = 5;
    const auto first = train(d.seq, d.pairs, cfg, interrupt);
    CHECK(first.step == 5);
    const auto bytes = autodiff::serialize_checkpoint(first.to_checkpoint());
    TrainOptions opts;
    opts.resume = autodiff::deserialize_checkpoint(bytes);
    const auto resumed = train(d.seq, d.pairs, cfg, opts);
    CHECK(resumed.step == 12);
    CHECK(loss_log_csv(resumed.log) == loss_log_csv(a.log));
    CHECK(snapshot(resumed.generator().params()) == snapshot(a.generator().params()));
    CHECK(snapshot(resumed.discriminator().params()) == snapshot(a.discriminator().params()));
    CHECK(resumed.training_hashes == a.training_hashes);
}

TEST_CASE("single repeated pair overfits under L1") {
    auto cfg = l1_only(small_config());
    cfg.base_channels = 16;
    cfg.steps = 500;
    const auto& d = toy_dataset();
    pairs::PairIndex one;
    one.pairs = {d.pairs.pairs[0]};
    const auto s = train(d.seq, one, cfg);
    const double initial = s.log.front().losses.l1;
    const auto batch = first_batch(cfg);
    const double final_l1 = s.evaluate(batch).l1;
    MESSAGE("initial " << initial << " final " << final_l1);
    CHECK(final_l1 < initial);
    CHECK(final_l1 < 0.05);
}
