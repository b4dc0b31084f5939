#include "deskstage/eval/evaluation.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "deskstage/autodiff/ops.hpp"
#include "deskstage/capture/renderer.hpp"
#include "deskstage/imaging/hash.hpp"
#include "deskstage/imaging/metrics.hpp"
#include "deskstage/pairs/pair_miner.hpp"

namespace deskstage::eval {

namespace ad = autodiff;
using imaging::ImageFrame;

ImageFrame CopyInputRelighter::relight(const capture::CaptureFrame& source, const imaging::LightFrame&) const {
    return source.image;
}

OracleRelighter::OracleRelighter(capture::SceneConfig scene, capture::HeadProxy head)
    : scene_(std::move(scene)), head_(std::move(head)) {
    scene_.sensor_noise_sigma = 0.0;
    scene_.gamma_applied = false;
}

ImageFrame OracleRelighter::relight(const capture::CaptureFrame& source, const imaging::LightFrame& target) const {
    if (!source.pose) throw EvalError("oracle relighting needs a ground-truth pose");
    return capture::render_frame(scene_, head_, *source.pose, target).image;
}

NeuralRelighter::NeuralRelighter(std::shared_ptr<const training::TrainingSession> session)
    : session_(std::move(session)) {
    if (!session_) throw EvalError("neural relighter needs a model");
}

NeuralRelighter NeuralRelighter::from_checkpoint(const ad::Checkpoint& ckpt) {
    return NeuralRelighter(
        std::make_shared<const training::TrainingSession>(training::TrainingSession::from_checkpoint(ckpt)));
}

ImageFrame NeuralRelighter::relight(const capture::CaptureFrame& source, const imaging::LightFrame& target) const {
    const auto& crop = session_->config().crop;
    const auto box = training::crop_box(source.mask, crop);
    const ImageFrame patch = imaging::crop_resize(source.image, box, crop.width, crop.height);
    ImageFrame delta;
    {
        ad::NoGradGuard guard;
        const auto x = nn::image_to_tensor<float>(patch);
        const auto out = session_->generator().relight(
            x, nn::light_to_tensor<float>(source.light, session_->max_radiance()),
            nn::light_to_tensor<float>(target, session_->max_radiance()));
        delta = nn::tensor_to_image(ad::sub(out, x));
    }
    ImageFrame result = source.image;
    imaging::add_resampled(result, delta, box);
    return result;
}

PerceptualProxy::PerceptualProxy(std::uint64_t seed) : features_(seed) {}

double PerceptualProxy::distance(const ImageFrame& a, const ImageFrame& b) const {
    if (!a.same_shape(b)) throw EvalError("perceptual proxy needs equally sized frames");
    ad::NoGradGuard guard;
    return training::loss_perceptual(nn::image_to_tensor<float>(a), nn::image_to_tensor<float>(b), features_)
        .item();
}

EvalReport score_against(const capture::CaptureSequence& candidates_seq, std::span<const std::size_t> candidates,
                         const capture::CaptureSequence& tests_seq, std::span<const std::size_t> tests,
                         const Relighter& model, const PerceptualProxy& proxy, int protocol) {
    if (tests.empty()) throw EvalError("no test frames to evaluate");
    if (candidates.empty()) throw EvalError("no candidate input frames");
    std::vector<imaging::Mask> masks;
    masks.reserve(candidates.size());
    for (std::size_t c : candidates) masks.push_back(candidates_seq.frames.at(c).mask);

    EvalReport report;
    report.protocol = protocol;
    report.model = model.name();
    for (std::size_t t : tests) {
        const auto& ref = tests_seq.frames.at(t);
        const auto match = pairs::nearest_pose_match(ref.mask, masks);
        const std::size_t src = candidates[match.index];
        const ImageFrame relit = model.relight(candidates_seq.frames[src], ref.light);
        FrameScore s;
        s.test_index = t;
        s.source_index = src;
        s.match_iou = match.iou;
        s.psnr = imaging::psnr(relit, ref.image);
        s.rmse = imaging::rmse(relit, ref.image);
        s.perceptual = proxy.distance(relit, ref.image);
        report.frames.push_back(s);
    }
    const double n = static_cast<double>(report.frames.size());
    for (const auto& f : report.frames) {
        report.mean_psnr += f.psnr / n;
        report.mean_rmse += f.rmse / n;
        report.mean_perceptual += f.perceptual / n;
    }
    return report;
}

EvalReport eval_protocol1(const capture::CaptureSequence& train_seq, const Relighter& model,
                          const PerceptualProxy& proxy) {
    const auto candidates = train_seq.training_indices();
    const auto tests = train_seq.test_indices();
    return score_against(train_seq, candidates, train_seq, tests, model, proxy, 1);
}

EvalReport eval_protocol2(const capture::CaptureSequence& held_out, const Relighter& model,
                          const PerceptualProxy& proxy, std::span<const std::string> training_hashes) {
    const std::set<std::string> seen(training_hashes.begin(), training_hashes.end());
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        if (seen.count(imaging::content_hash(held_out.frames[i].image))) {
            throw EvalError("held-out frame " + std::to_string(i) + " also appears in the training data");
        }
    }
    const auto candidates = held_out.training_indices();
    const auto tests = held_out.test_indices();
    return score_against(held_out, candidates, held_out, tests, model, proxy, 2);
}

std::string report_csv(const EvalReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "protocol,model,test_index,source_index,match_iou,psnr,rmse,perceptual_proxy\n";
    for (const auto& f : r.frames) {
        out << r.protocol << ',' << r.model << ',' << f.test_index << ',' << f.source_index << ',' << f.match_iou
            << ',' << f.psnr << ',' << f.rmse << ',' << f.perceptual << '\n';
    }
    out << r.protocol << ',' << r.model << ",mean,,," << r.mean_psnr << ',' << r.mean_rmse << ','
        << r.mean_perceptual << '\n';
    return out.str();
}

double temporal_stability(std::span<const ImageFrame> frames) {
    if (frames.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < frames.size(); ++i) total += imaging::mean_abs_diff(frames[i - 1], frames[i]);
    return total / static_cast<double>(frames.size() - 1);
}

RelitSequence relight_sequence(const capture::CaptureSequence& seq, const imaging::LightFrame& target,
                               const Relighter& model) {
    RelitSequence out;
    for (std::size_t i = seq.active.begin; i < seq.active.end && i < seq.size(); ++i) {
        out.frames.push_back(model.relight(seq.frames[i], target));
    }
    out.stability = temporal_stability(out.frames);
    return out;
}

}  // namespace deskstage::eval
