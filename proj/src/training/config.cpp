#include "deskstage/training/config.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace deskstage::training {

void TrainConfig::validate() const {
    for (double l : {lambda_l1, lambda_p, lambda_c, lambda_d}) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw TrainingError("loss weights must be finite and >= 0");
    }
    if (!(lr_g > 0.0) || !(lr_d > 0.0)) throw TrainingError("learning rates must be positive");
    if (batch != 1) throw TrainingError("only batch size 1 is supported");
    if (steps < 0) throw TrainingError("steps must be >= 0");
    if (!(grad_clip > 0.0)) throw TrainingError("grad_clip must be positive");
    if (!(lr_decay_start >= 0.0 && lr_decay_start <= 1.0)) throw TrainingError("lr_decay_start must lie in [0, 1]");
    if (!(disc_output_gain > 0.0)) throw TrainingError("disc_output_gain must be positive");
    if (d_steps < 0) throw TrainingError("d_steps must be >= 0");
    if (checkpoint_every < 1) throw TrainingError("checkpoint_every must be >= 1");
    if (crop.width < 8 || crop.height < 8 || crop.width % 2 || crop.height % 2) {
        throw TrainingError("crop size must be even and at least 8");
    }
    if (!(crop.dilation >= 0.0)) throw TrainingError("crop dilation must be >= 0");
    if (base_channels < 1) throw TrainingError("base_channels must be positive");
}

nn::GeneratorConfig TrainConfig::generator_config(int light_width, int light_height) const {
    nn::GeneratorConfig g;
    g.light_width = light_width;
    g.light_height = light_height;
    g.base_channels = base_channels;
    g.mode = mode;
    if (!use_source_light && mode == nn::ConditioningMode::kDemodulation) {
        g.mode = nn::ConditioningMode::kNoSourceLight;
    }
    g.routing = routing;
    g.seed = seed * 2 + 1;
    return g;
}

nn::DiscriminatorConfig TrainConfig::discriminator_config() const {
    auto d = nn::DiscriminatorConfig::toy(crop.width, crop.height);
    d.seed = seed * 2 + 2;
    d.output_gain = disc_output_gain;
    return d;
}

double TrainConfig::lr_scale(std::int64_t step) const {
    const double start = lr_decay_start * static_cast<double>(steps);
    const double s = static_cast<double>(std::min(step, steps - 1));
    if (lr_decay_start >= 1.0 || s < start) return 1.0;
    return (static_cast<double>(steps) - s) / (static_cast<double>(steps) - start + 1.0);
}

std::string to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["lambda_l1"] = c.lambda_l1;
    j["lambda_p"] = c.lambda_p;
    j["lambda_c"] = c.lambda_c;
    j["lambda_d"] = c.lambda_d;
    j["lr_g"] = c.lr_g;
    j["lr_d"] = c.lr_d;
    j["batch"] = c.batch;
    j["steps"] = c.steps;
    j["seed"] = c.seed;
    j["use_perceptual"] = c.use_perceptual;
    j["use_cycle"] = c.use_cycle;
    j["use_adversarial"] = c.use_adversarial;
    j["use_source_light"] = c.use_source_light;
    j["perceptual_extractor_seed"] = c.perceptual_extractor_seed;
    j["grad_clip"] = c.grad_clip;
    j["lr_decay_start"] = c.lr_decay_start;
    j["disc_output_gain"] = c.disc_output_gain;
    j["d_steps"] = c.d_steps;
    j["checkpoint_every"] = c.checkpoint_every;
    j["crop_width"] = c.crop.width;
    j["crop_height"] = c.crop.height;
    j["crop_dilation"] = c.crop.dilation;
    j["base_channels"] = c.base_channels;
    j["conditioning_mode"] = nn::to_string(c.mode);
    j["code_routing"] = nn::to_string(c.routing);
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TrainConfig c;
    c.lambda_l1 = j.at("lambda_l1").get<double>();
    c.lambda_p = j.at("lambda_p").get<double>();
    c.lambda_c = j.at("lambda_c").get<double>();
    c.lambda_d = j.at("lambda_d").get<double>();
    c.lr_g = j.at("lr_g").get<double>();
    c.lr_d = j.at("lr_d").get<double>();
    c.batch = j.at("batch").get<int>();
    c.steps = j.at("steps").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.use_perceptual = j.at("use_perceptual").get<bool>();
    c.use_cycle = j.at("use_cycle").get<bool>();
    c.use_adversarial = j.at("use_adversarial").get<bool>();
    c.use_source_light = j.at("use_source_light").get<bool>();
    c.perceptual_extractor_seed = j.at("perceptual_extractor_seed").get<std::uint64_t>();
    c.grad_clip = j.at("grad_clip").get<double>();
    c.lr_decay_start = j.at("lr_decay_start").get<double>();
    c.disc_output_gain = j.at("disc_output_gain").get<double>();
    c.d_steps = j.at("d_steps").get<int>();
    c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
    c.crop.width = j.at("crop_width").get<int>();
    c.crop.height = j.at("crop_height").get<int>();
    c.crop.dilation = j.at("crop_dilation").get<double>();
    c.base_channels = j.at("base_channels").get<int>();
    c.mode = nn::parse_conditioning_mode(j.at("conditioning_mode").get<std::string>());
    c.routing = nn::parse_code_routing(j.at("code_routing").get<std::string>());
    c.validate();
    return c;
}

}  // namespace deskstage::training
