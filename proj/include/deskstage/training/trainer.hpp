#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deskstage/autodiff/adam.hpp"
#include "deskstage/autodiff/checkpoint.hpp"
#include "deskstage/pairs/pair_miner.hpp"
#include "deskstage/training/features.hpp"
#include "deskstage/training/pair_data.hpp"

namespace deskstage::training {

struct LossReport {
    double l1 = 0.0;
    double perceptual = 0.0;
    double cycle = 0.0;
    double adv_g = 0.0;
    double adv_d = 0.0;
    /// Weighted generator objective.
    double total_g = 0.0;
};

struct LogRow {
    std::int64_t step = 0;
    LossReport losses;
};

/// Generator, discriminator, frozen feature extractor and both optimizers.
class TrainingSession {
public:
    TrainingSession(const TrainConfig& cfg, int light_width, int light_height, float max_radiance);

    const TrainConfig& config() const { return cfg_; }
    /// Overrides the step budget, which also sets the learning-rate schedule.
    void set_total_steps(std::int64_t steps);
    nn::Generator<float>& generator() { return g_; }
    const nn::Generator<float>& generator() const { return g_; }
    nn::Discriminator<float>& discriminator() { return d_; }
    const nn::Discriminator<float>& discriminator() const { return d_; }
    const FeatureExtractor<float>& features() const { return f_; }
    float max_radiance() const { return max_radiance_; }

    /// One Adam update of G. Terms that are disabled or weighted 0 are
    /// skipped and reported as 0.
    LossReport generator_step(const Batch& batch);
    /// One Adam update of D on (target, detached G output). Returns the D loss.
    double discriminator_step(const Batch& batch);
    /// The G objective without updating anything.
    LossReport evaluate(const Batch& batch) const;

    std::int64_t step = 0;
    std::vector<LogRow> log;
    std::vector<std::string> training_hashes;

    autodiff::Checkpoint to_checkpoint() const;
    static TrainingSession from_checkpoint(const autodiff::Checkpoint& ckpt);

private:
    LossReport compute(const Batch& batch, Tensor<float>* total) const;

    TrainConfig cfg_;
    int light_width_;
    int light_height_;
    float max_radiance_;
    nn::Generator<float> g_;
    nn::Discriminator<float> d_;
    FeatureExtractor<float> f_;
    autodiff::AdamState<float> opt_g_;
    autodiff::AdamState<float> opt_d_;
};

/// Pair order for a step: a fresh seeded permutation per pass over the pairs.
std::size_t pair_for_step(std::uint64_t seed, std::int64_t step, std::size_t pair_count);

struct TrainOptions {
    /// Checkpoint and loss-log directory; nothing is written when empty.
    std::filesystem::path out_dir;
    /// Continue from this state instead of initializing.
    std::optional<autodiff::Checkpoint> resume;
    /// Return once this step is reached, leaving the schedule of cfg.steps intact.
    std::optional<std::int64_t> stop_at;
};

/// Alternating G/D training over the mined pairs up to cfg.steps.
TrainingSession train(const capture::CaptureSequence& seq, const pairs::PairIndex& pairs,
                      const TrainConfig& cfg, const TrainOptions& options = {});

std::string loss_log_csv(const std::vector<LogRow>& log);

}  // namespace deskstage::training
