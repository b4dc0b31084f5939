#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "deskstage/capture/sequence.hpp"
#include "deskstage/training/trainer.hpp"

namespace deskstage::eval {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Anything that re-renders a captured frame under a new monitor pattern.
class Relighter {
public:
    virtual ~Relighter() = default;
    virtual std::string name() const = 0;
    virtual imaging::ImageFrame relight(const capture::CaptureFrame& source,
                                        const imaging::LightFrame& target) const = 0;
};

/// Returns the source frame unchanged.
class CopyInputRelighter final : public Relighter {
public:
    std::string name() const override { return "copy-input"; }
    imaging::ImageFrame relight(const capture::CaptureFrame& source,
                                const imaging::LightFrame& target) const override;
};

/// Re-renders the source pose with the simulator, noise and gamma off.
class OracleRelighter final : public Relighter {
public:
    OracleRelighter(capture::SceneConfig scene, capture::HeadProxy head);
    std::string name() const override { return "oracle"; }
    imaging::ImageFrame relight(const capture::CaptureFrame& source,
                                const imaging::LightFrame& target) const override;

private:
    capture::SceneConfig scene_;
    capture::HeadProxy head_;
};

/// Runs the trained generator on the head crop and adds the predicted change
/// back into the full frame; pixels outside the crop keep their input values.
class NeuralRelighter final : public Relighter {
public:
    explicit NeuralRelighter(std::shared_ptr<const training::TrainingSession> session);
    static NeuralRelighter from_checkpoint(const autodiff::Checkpoint& ckpt);

    std::string name() const override { return "neural"; }
    imaging::ImageFrame relight(const capture::CaptureFrame& source,
                                const imaging::LightFrame& target) const override;
    const training::TrainingSession& session() const { return *session_; }

private:
    std::shared_ptr<const training::TrainingSession> session_;
};

/// Perceptual-distance proxy: frozen random-feature distance, 0 for equal frames.
class PerceptualProxy {
public:
    explicit PerceptualProxy(std::uint64_t seed = 7);
    double distance(const imaging::ImageFrame& a, const imaging::ImageFrame& b) const;

private:
    training::FeatureExtractor<float> features_;
};

struct FrameScore {
    std::size_t test_index = 0;
    std::size_t source_index = 0;
    double match_iou = 0.0;
    double psnr = 0.0;
    double rmse = 0.0;
    double perceptual = 0.0;
};

struct EvalReport {
    int protocol = 1;
    std::string model;
    std::vector<FrameScore> frames;
    double mean_psnr = 0.0;
    double mean_rmse = 0.0;
    double mean_perceptual = 0.0;
};

/// Shared scoring: for each test frame pick the candidate with the highest
/// mask IoU, relight it to the test frame's pattern and compare.
EvalReport score_against(const capture::CaptureSequence& candidates_seq,
                         std::span<const std::size_t> candidates, const capture::CaptureSequence& tests_seq,
                         std::span<const std::size_t> tests, const Relighter& model,
                         const PerceptualProxy& proxy, int protocol);

/// Inputs from the training frames of `train_seq`, references from its test range.
EvalReport eval_protocol1(const capture::CaptureSequence& train_seq, const Relighter& model,
                          const PerceptualProxy& proxy);

/// Inputs and references both from a held-out capture. Throws if any of its
/// frames hashes equal to a training frame.
EvalReport eval_protocol2(const capture::CaptureSequence& held_out, const Relighter& model,
                          const PerceptualProxy& proxy, std::span<const std::string> training_hashes);

std::string report_csv(const EvalReport& report);

struct RelitSequence {
    std::vector<imaging::ImageFrame> frames;
    double stability = 0.0;
};

/// Mean absolute difference between consecutive frames, averaged over pairs.
double temporal_stability(std::span<const imaging::ImageFrame> frames);

/// Relights every active frame of `seq` to the same pattern.
RelitSequence relight_sequence(const capture::CaptureSequence& seq, const imaging::LightFrame& target,
                               const Relighter& model);

}  // namespace deskstage::eval
