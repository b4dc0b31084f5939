#include "deskstage/nn/generator.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "deskstage/autodiff/ops.hpp"

namespace deskstage::nn {

namespace ad = autodiff;

namespace {
constexpr double kSlope = 0.2;
const double kHeGain = std::sqrt(2.0 / (1.0 + kSlope * kSlope));
}  // namespace

std::string to_string(ConditioningMode mode) {
    switch (mode) {
        case ConditioningMode::kDemodulation: return "demodulation";
        case ConditioningMode::kLatentConcat: return "latent-concat";
        case ConditioningMode::kNoSourceLight: return "no-source-light";
    }
    return "unknown";
}

std::string to_string(CodeRouting routing) {
    return routing == CodeRouting::kConcatenated ? "concatenated" : "per-code";
}

ConditioningMode parse_conditioning_mode(const std::string& name) {
    if (name == "demodulation") return ConditioningMode::kDemodulation;
    if (name == "latent-concat") return ConditioningMode::kLatentConcat;
    if (name == "no-source-light") return ConditioningMode::kNoSourceLight;
    throw NetworkError("unknown conditioning mode '" + name + "'");
}

CodeRouting parse_code_routing(const std::string& name) {
    if (name == "concatenated") return CodeRouting::kConcatenated;
    if (name == "per-code") return CodeRouting::kPerCode;
    throw NetworkError("unknown code routing '" + name + "'");
}

int GeneratorConfig::channels(int level) const {
    return std::min(base_channels << level, max_channels);
}

void GeneratorConfig::validate() const {
    if (light_width < 1 || light_height < 1) throw NetworkError("light grid must be non-empty");
    if (base_channels < 1 || max_channels < base_channels) throw NetworkError("invalid channel plan");
    if (code_length < 1 || encoder_hidden < 1 || mlp_hidden < 1) throw NetworkError("invalid code sizes");
}

template <typename T>
typename Generator<T>::Conv Generator<T>::make_conv(const std::string& name, int in, int out, int kernel,
                                                    int stride, int level, bool demod) {
    Conv c;
    c.weight = params_.add(name + ".weight",
                           init_fan_in<T>({out, in, kernel, kernel}, in * kernel * kernel, kHeGain, rng_));
    if (!demod) c.bias = params_.add(name + ".bias", Tensor<T>::zeros({out}));
    c.stride = stride;
    c.pad = kernel / 2;
    layers_.push_back({name, in, out, kernel, stride, level, demod});
    return c;
}

template <typename T>
typename Generator<T>::ModHead Generator<T>::make_head(const std::string& name, int hidden, int in, int out) {
    ModHead h;
    // Small output weights keep the predicted scales near 1 at initialization.
    h.scale_w = params_.add(name + ".scale.weight", init_fan_in<T>({in, hidden}, hidden, 0.1, rng_));
    h.scale_b = params_.add(name + ".scale.bias", Tensor<T>::zeros({in}));
    h.bias_w = params_.add(name + ".bias.weight", init_fan_in<T>({out, hidden}, hidden, 0.1, rng_));
    h.bias_b = params_.add(name + ".bias.bias", Tensor<T>::zeros({out}));
    return h;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    LightEncoderConfig ec{cfg.light_width, cfg.light_height, cfg.encoder_hidden, cfg.code_length};
    encoder_ = LightEncoder<T>(ec, rng_, params_, "light_encoder.");

    enc_in_ = make_conv("enc0.conv", 3, cfg.channels(0), 3, 1, 0, false);
    for (int l = 1; l <= GeneratorConfig::kLevels; ++l) {
        const std::string p = "enc" + std::to_string(l);
        enc_down_.push_back(make_conv(p + ".down", cfg.channels(l - 1), cfg.channels(l), 3, 2, 0, false));
        enc_conv_.push_back(make_conv(p + ".conv", cfg.channels(l), cfg.channels(l), 3, 1, 0, false));
    }

    const bool latent = cfg.mode == ConditioningMode::kLatentConcat;
    const int joint = 2 * cfg.code_length;
    if (latent) {
        const int c = cfg.channels(GeneratorConfig::kLevels);
        fuse_ = make_conv("bottleneck.fuse", c + joint, c, 3, 1, 0, false);
    }

    for (int k = 1; k <= GeneratorConfig::kLevels; ++k) {
        const int in = cfg.channels(GeneratorConfig::kLevels - k + 1);
        const int out = cfg.channels(GeneratorConfig::kLevels - k);
        const bool demod = !latent && k < GeneratorConfig::kLevels;
        const std::string p = "dec" + std::to_string(k);
        DecoderLevel d;
        d.modulated = demod;
        d.conv_a = make_conv(p + ".conv_a", in, out, 3, 1, k, demod);
        d.conv_b = make_conv(p + ".conv_b", 2 * out, out, 3, 1, k, demod);
        if (demod) {
            const int h = cfg.mlp_hidden;
            if (cfg.routing == CodeRouting::kConcatenated) {
                d.mlp_w = params_.add(p + ".mlp.weight", init_fan_in<T>({h, joint}, joint, kHeGain, rng_));
                d.mlp_b = params_.add(p + ".mlp.bias", Tensor<T>::zeros({h}));
            } else {
                const int c = cfg.code_length;
                d.mlp_a_w = params_.add(p + ".mlp_a.weight", init_fan_in<T>({h, c}, c, kHeGain, rng_));
                d.mlp_a_b = params_.add(p + ".mlp_a.bias", Tensor<T>::zeros({h}));
                d.mlp_b_w = params_.add(p + ".mlp_b.weight", init_fan_in<T>({h, c}, c, kHeGain, rng_));
                d.mlp_b_b = params_.add(p + ".mlp_b.bias", Tensor<T>::zeros({h}));
            }
            d.head_a = make_head(p + ".head_a", h, in, out);
            d.head_b = make_head(p + ".head_b", h, 2 * out, out);
        }
        dec_.push_back(std::move(d));
    }
    out_ = make_conv("out.conv", cfg.channels(0), 3, 1, 1, 0, false);
}

template <typename T>
Tensor<T> Generator<T>::run_conv(const Conv& c, const Tensor<T>& x) const {
    return ad::conv2d(x, c.weight, c.bias, c.stride, c.pad);
}

template <typename T>
Tensor<T> Generator<T>::mlp_hidden(const Tensor<T>& w, const Tensor<T>& b, const Tensor<T>& z) const {
    return ad::leaky_relu(ad::fully_connected(z, w, b), T(kSlope));
}

template <typename T>
Tensor<T> Generator<T>::run_modulated(const Conv& c, const ModHead& head, const Tensor<T>& hidden,
                                      const Tensor<T>& x) const {
    const int in = c.weight.dim(1);
    const int out = c.weight.dim(0);
    auto delta = ad::reshape(ad::fully_connected(hidden, head.scale_w, head.scale_b), {in});
    auto scales = ad::add(delta, Tensor<T>::full({in}, T(1)));
    auto bias = ad::reshape(ad::fully_connected(hidden, head.bias_w, head.bias_b), {out});
    auto w = ad::demodulate(c.weight, scales);
    return ad::add_channel_bias(ad::conv2d(x, w, Tensor<T>(), c.stride, c.pad), bias);
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& image, const Tensor<T>& code_s_in,
                                const Tensor<T>& code_t) const {
    if (!image.defined() || image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3) {
        throw NetworkError("generator expects a [1,3,H,W] image");
    }
    const Shape code_shape{1, cfg_.code_length};
    if (code_s_in.shape() != code_shape || code_t.shape() != code_shape) {
        throw NetworkError("generator codes must be [1," + std::to_string(cfg_.code_length) + "]");
    }
    const int h = image.dim(2), w = image.dim(3);
    if (h < 1 || w < 1) throw NetworkError("empty generator input");
    const int mult = 1 << GeneratorConfig::kLevels;
    const int pad_h = (mult - h % mult) % mult;
    const int pad_w = (mult - w % mult) % mult;

    Tensor<T> code_s = code_s_in;
    if (cfg_.mode == ConditioningMode::kNoSourceLight) code_s = Tensor<T>::zeros(code_shape);

    const T slope = T(kSlope);
    Tensor<T> x = (pad_h || pad_w) ? ad::pad_replicate(image, 0, pad_h, 0, pad_w) : image;
    std::vector<Tensor<T>> skips;
    x = ad::leaky_relu(run_conv(enc_in_, x), slope);
    skips.push_back(x);
    for (int l = 0; l < GeneratorConfig::kLevels; ++l) {
        x = ad::leaky_relu(run_conv(enc_down_[l], x), slope);
        x = ad::leaky_relu(run_conv(enc_conv_[l], x), slope);
        skips.push_back(x);
    }

    const auto joint = ad::concat(code_s, code_t);
    if (cfg_.mode == ConditioningMode::kLatentConcat) {
        auto codes = ad::broadcast_spatial(joint, x.dim(2), x.dim(3));
        x = ad::leaky_relu(run_conv(fuse_, ad::concat(x, codes)), slope);
    }

    for (int k = 0; k < GeneratorConfig::kLevels; ++k) {
        const auto& d = dec_[k];
        const auto& skip = skips[GeneratorConfig::kLevels - 1 - k];
        x = ad::bilinear_upsample_2x(x);
        if (d.modulated) {
            Tensor<T> ha, hb;
            if (cfg_.routing == CodeRouting::kConcatenated) {
                ha = hb = mlp_hidden(d.mlp_w, d.mlp_b, joint);
            } else {
                ha = mlp_hidden(d.mlp_a_w, d.mlp_a_b, code_s);
                hb = mlp_hidden(d.mlp_b_w, d.mlp_b_b, code_t);
            }
            x = ad::leaky_relu(run_modulated(d.conv_a, d.head_a, ha, x), slope);
            x = ad::leaky_relu(run_modulated(d.conv_b, d.head_b, hb, ad::concat(x, skip)), slope);
        } else {
            x = ad::leaky_relu(run_conv(d.conv_a, x), slope);
            x = ad::leaky_relu(run_conv(d.conv_b, ad::concat(x, skip)), slope);
        }
    }
    x = run_conv(out_, x);
    if (pad_h || pad_w) x = ad::crop(x, 0, 0, h, w);
    return cfg_.residual ? ad::add(image, x) : x;
}

template <typename T>
Tensor<T> Generator<T>::relight(const Tensor<T>& image, const Tensor<T>& light_s,
                                const Tensor<T>& light_t) const {
    return forward(image, encode_light(light_s), encode_light(light_t));
}

template <typename T>
std::string Generator<T>::architecture_manifest() const {
    nlohmann::ordered_json j;
    j["mode"] = to_string(cfg_.mode);
    j["routing"] = to_string(cfg_.routing);
    j["base_channels"] = cfg_.base_channels;
    j["max_channels"] = cfg_.max_channels;
    j["light_grid"] = {cfg_.light_width, cfg_.light_height};
    j["code_length"] = cfg_.code_length;
    j["residual"] = cfg_.residual;
    auto& list = j["parameters"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params_.names().size(); ++i) {
        list.push_back({{"name", params_.names()[i]}, {"shape", params_.tensors()[i].shape()}});
    }
    j["parameter_count"] = params_.scalar_count();
    return j.dump(1);
}

template class Generator<float>;
template class Generator<double>;

}  // namespace deskstage::nn
