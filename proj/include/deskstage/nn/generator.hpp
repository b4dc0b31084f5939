#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deskstage/nn/light_encoder.hpp"

namespace deskstage::nn {

enum class ConditioningMode { kDemodulation, kLatentConcat, kNoSourceLight };

/// Which code drives each modulated conv of a decoder level: the joint
/// [code_s, code_t] vector for both, or code_s for the first and code_t for
/// the second.
enum class CodeRouting { kConcatenated, kPerCode };

std::string to_string(ConditioningMode mode);
std::string to_string(CodeRouting routing);
ConditioningMode parse_conditioning_mode(const std::string& name);
CodeRouting parse_code_routing(const std::string& name);

struct GeneratorConfig {
    int light_width = 16;
    int light_height = 9;
    int base_channels = 16;
    int max_channels = 128;
    int encoder_hidden = 512;
    int code_length = 256;
    int mlp_hidden = 128;
    ConditioningMode mode = ConditioningMode::kDemodulation;
    CodeRouting routing = CodeRouting::kConcatenated;
    /// Output = input + predicted change.
    bool residual = true;
    std::uint64_t seed = 1;

    static constexpr int kLevels = 4;
    int channels(int level) const;
    void validate() const;
};

struct LayerInfo {
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    /// 0 for encoder and output layers; 1 (coarsest) to 4 (full resolution).
    int decoder_level = 0;
    bool demodulated = false;
};

/// U-Net relighting generator with its light encoder. Single-sample batches.
template <typename T>
class Generator {
public:
    explicit Generator(const GeneratorConfig& cfg);
    Generator(const Generator&) = delete;
    Generator& operator=(const Generator&) = delete;
    Generator(Generator&&) noexcept = default;
    Generator& operator=(Generator&&) noexcept = default;

    const GeneratorConfig& config() const { return cfg_; }
    ParamSet<T>& params() { return params_; }
    const ParamSet<T>& params() const { return params_; }
    const LightEncoder<T>& light_encoder() const { return encoder_; }

    /// light [1, W*H*3] (normalized) -> [1, code_length].
    Tensor<T> encode_light(const Tensor<T>& light) const { return encoder_.encode(light); }
    /// image [1, 3, H, W], codes [1, code_length] -> [1, 3, H, W]. Any H, W
    /// are accepted; the network runs on an edge-padded multiple of 16.
    Tensor<T> forward(const Tensor<T>& image, const Tensor<T>& code_s, const Tensor<T>& code_t) const;
    /// Encodes both lights and runs forward.
    Tensor<T> relight(const Tensor<T>& image, const Tensor<T>& light_s, const Tensor<T>& light_t) const;

    std::vector<LayerInfo> layers() const { return layers_; }
    /// JSON listing of configuration and every parameter's name and shape.
    std::string architecture_manifest() const;

private:
    struct Conv {
        Tensor<T> weight;
        Tensor<T> bias;
        int stride = 1;
        int pad = 1;
    };
    struct ModHead {
        Tensor<T> scale_w, scale_b, bias_w, bias_b;
    };
    struct DecoderLevel {
        Conv conv_a, conv_b;
        bool modulated = false;
        Tensor<T> mlp_w, mlp_b;      // shared hidden layer (concatenated routing)
        Tensor<T> mlp_a_w, mlp_a_b;  // per-code routing
        Tensor<T> mlp_b_w, mlp_b_b;
        ModHead head_a, head_b;
    };

    Conv make_conv(const std::string& name, int in, int out, int kernel, int stride, int level, bool demod);
    ModHead make_head(const std::string& name, int hidden, int in, int out);
    Tensor<T> run_conv(const Conv& c, const Tensor<T>& x) const;
    Tensor<T> run_modulated(const Conv& c, const ModHead& head, const Tensor<T>& hidden,
                            const Tensor<T>& x) const;
    Tensor<T> mlp_hidden(const Tensor<T>& w, const Tensor<T>& b, const Tensor<T>& z) const;

    GeneratorConfig cfg_;
    std::mt19937_64 rng_;
    ParamSet<T> params_;
    LightEncoder<T> encoder_;
    Conv enc_in_;
    std::vector<Conv> enc_down_, enc_conv_;
    Conv fuse_;
    std::vector<DecoderLevel> dec_;
    Conv out_;
    std::vector<LayerInfo> layers_;
};

}  // namespace deskstage::nn
