#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "deskstage/nn/discriminator.hpp"
#include "deskstage/nn/generator.hpp"

namespace deskstage::training {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CropConfig {
    int width = 32;
    int height = 48;
    /// Relative growth of the mask bounding box before fitting the aspect.
    double dilation = 0.1;
};

struct TrainConfig {
    double lambda_l1 = 1.0;
    double lambda_p = 0.1;
    double lambda_c = 0.5;
    double lambda_d = 0.1;
    double lr_g = 1e-3;
    double lr_d = 1e-6;
    int batch = 1;
    std::int64_t steps = 2000;
    std::uint64_t seed = 1;
    bool use_perceptual = true;
    bool use_cycle = true;
    bool use_adversarial = true;
    bool use_source_light = true;
    std::uint64_t perceptual_extractor_seed = 7;
    double grad_clip = 10.0;
    /// Fraction of `steps` after which both learning rates fall linearly to
    /// zero at the last step; 1 keeps them constant.
    double lr_decay_start = 0.5;
    /// Init gain of the discriminator's score layer.
    double disc_output_gain = 0.1;
    /// D updates per G update.
    int d_steps = 1;
    std::int64_t checkpoint_every = 500;
    CropConfig crop;
    int base_channels = 16;
    nn::ConditioningMode mode = nn::ConditioningMode::kDemodulation;
    nn::CodeRouting routing = nn::CodeRouting::kConcatenated;

    void validate() const;
    /// Generator settings implied by this config for a given light grid.
    nn::GeneratorConfig generator_config(int light_width, int light_height) const;
    nn::DiscriminatorConfig discriminator_config() const;
    /// Learning-rate multiplier for the update made at `step`.
    double lr_scale(std::int64_t step) const;
};

std::string to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace deskstage::training
