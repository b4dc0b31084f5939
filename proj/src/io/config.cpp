#include "deskstage/io/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "deskstage/io/image_io.hpp"

namespace deskstage::io {

namespace {

class Section {
public:
    Section(const YAML::Node& root, std::string name) : name_(std::move(name)) {
        if (root && root[name_]) {
            node_ = root[name_];
            if (!node_.IsMap()) throw IoError("config section '" + name_ + "' must be a mapping");
        }
    }

    template <typename V>
    void read(const std::string& key, V& out) {
        seen_.insert(key);
        if (!node_ || !node_[key]) return;
        try {
            out = node_[key].template as<V>();
        } catch (const YAML::Exception&) {
            throw IoError("config key " + name_ + "." + key + " has the wrong type");
        }
    }

    void finish() const {
        if (!node_) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw IoError("unknown config key " + name_ + "." + key);
        }
    }

    bool has(const std::string& key) const { return node_ && node_[key]; }
    YAML::Node node(const std::string& key) const { return node_[key]; }

private:
    std::string name_;
    YAML::Node node_;
    std::set<std::string> seen_;
};

}  // namespace

capture::HeadProxy ProjectConfig::head() const {
    if (head_model == "default") return capture::HeadProxy::default_head();
    if (head_model == "sphere") return capture::HeadProxy::lambertian_sphere(sphere_radius, {0.6, 0.6, 0.6});
    throw IoError("unknown head model '" + head_model + "'");
}

ProjectConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw IoError(std::string("config is not valid YAML: ") + e.what());
    }
    if (root && !root.IsNull() && !root.IsMap()) throw IoError("config must be a mapping of sections");
    if (root && root.IsMap()) {
        static const std::set<std::string> sections{"scene", "head", "simulation", "train"};
        for (const auto& kv : root) {
            if (!sections.count(kv.first.as<std::string>())) {
                throw IoError("unknown config section '" + kv.first.as<std::string>() + "'");
            }
        }
    }

    ProjectConfig cfg;
    {
        Section s(root, "scene");
        std::string preset = "toy";
        s.read("preset", preset);
        if (preset == "paper") {
            cfg.plan.scene = capture::SceneConfig::paper_scale();
        } else if (preset != "toy") {
            throw IoError("scene.preset must be toy or paper");
        }
        auto& sc = cfg.plan.scene;
        s.read("monitor_width_m", sc.monitor_width_m);
        s.read("monitor_height_m", sc.monitor_height_m);
        s.read("subject_distance_m", sc.subject_distance_m);
        s.read("camera_hfov_deg", sc.camera.hfov_deg);
        s.read("image_width", sc.camera.width);
        s.read("image_height", sc.camera.height);
        s.read("light_grid_width", sc.light_grid_width);
        s.read("light_grid_height", sc.light_grid_height);
        if (s.has("ambient_radiance") && s.node("ambient_radiance").IsScalar()) {
            double a = 0.0;
            s.read("ambient_radiance", a);
            sc.ambient_radiance = {a, a, a};
        } else {
            std::vector<double> v(sc.ambient_radiance.begin(), sc.ambient_radiance.end());
            s.read("ambient_radiance", v);
            if (v.size() != 3) throw IoError("scene.ambient_radiance needs 1 or 3 values");
            sc.ambient_radiance = {v[0], v[1], v[2]};
        }
        s.read("sensor_noise_sigma", sc.sensor_noise_sigma);
        s.read("gamma_applied", sc.gamma_applied);
        s.read("max_radiance", sc.max_radiance);
        s.read("rng_seed", sc.rng_seed);
        s.finish();
    }
    {
        Section s(root, "head");
        s.read("model", cfg.head_model);
        s.read("sphere_radius", cfg.sphere_radius);
        s.finish();
    }
    {
        Section s(root, "simulation");
        auto& p = cfg.plan;
        s.read("train_lights", p.train_lights);
        s.read("train_frames", p.train_frames);
        s.read("test_lights", p.test_lights);
        s.read("test_frames", p.test_frames);
        s.read("motion", p.motion);
        s.read("amplitude_deg", p.amplitude_deg);
        s.read("period_frames", p.period_frames);
        s.read("translation_m", p.translation_m);
        s.read("sync_frames", p.sync_frames);
        s.read("ring_inner", p.ring_inner);
        s.read("ring_outer", p.ring_outer);
        s.read("seed", p.seed);
        s.finish();
    }
    {
        Section s(root, "train");
        auto& t = cfg.train;
        s.read("lambda_l1", t.lambda_l1);
        s.read("lambda_p", t.lambda_p);
        s.read("lambda_c", t.lambda_c);
        s.read("lambda_d", t.lambda_d);
        s.read("lr_g", t.lr_g);
        s.read("lr_d", t.lr_d);
        s.read("batch", t.batch);
        s.read("steps", t.steps);
        s.read("seed", t.seed);
        s.read("use_perceptual", t.use_perceptual);
        s.read("use_cycle", t.use_cycle);
        s.read("use_adversarial", t.use_adversarial);
        s.read("use_source_light", t.use_source_light);
        s.read("perceptual_extractor_seed", t.perceptual_extractor_seed);
        s.read("grad_clip", t.grad_clip);
        s.read("lr_decay_start", t.lr_decay_start);
        s.read("disc_output_gain", t.disc_output_gain);
        s.read("d_steps", t.d_steps);
        s.read("checkpoint_every", t.checkpoint_every);
        s.read("crop_width", t.crop.width);
        s.read("crop_height", t.crop.height);
        s.read("crop_dilation", t.crop.dilation);
        s.read("base_channels", t.base_channels);
        std::string mode = nn::to_string(t.mode);
        std::string routing = nn::to_string(t.routing);
        s.read("conditioning_mode", mode);
        s.read("code_routing", routing);
        t.mode = nn::parse_conditioning_mode(mode);
        t.routing = nn::parse_code_routing(routing);
        s.finish();
    }
    cfg.plan.validate();
    cfg.train.validate();
    (void)cfg.head();
    return cfg;
}

ProjectConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_snapshot(const ProjectConfig& cfg) {
    const auto& sc = cfg.plan.scene;
    const auto& p = cfg.plan;
    nlohmann::ordered_json j;
    j["scene"] = {{"monitor_width_m", sc.monitor_width_m},
                  {"monitor_height_m", sc.monitor_height_m},
                  {"subject_distance_m", sc.subject_distance_m},
                  {"camera_hfov_deg", sc.camera.hfov_deg},
                  {"image_width", sc.camera.width},
                  {"image_height", sc.camera.height},
                  {"light_grid_width", sc.light_grid_width},
                  {"light_grid_height", sc.light_grid_height},
                  {"ambient_radiance", sc.ambient_radiance},
                  {"sensor_noise_sigma", sc.sensor_noise_sigma},
                  {"gamma_applied", sc.gamma_applied},
                  {"max_radiance", sc.max_radiance},
                  {"rng_seed", sc.rng_seed}};
    j["head"] = {{"model", cfg.head_model}, {"sphere_radius", cfg.sphere_radius}};
    j["simulation"] = {{"train_lights", p.train_lights},   {"train_frames", p.train_frames},
                       {"test_lights", p.test_lights},     {"test_frames", p.test_frames},
                       {"motion", p.motion},               {"amplitude_deg", p.amplitude_deg},
                       {"period_frames", p.period_frames}, {"translation_m", p.translation_m},
                       {"sync_frames", p.sync_frames},     {"ring_inner", p.ring_inner},
                       {"ring_outer", p.ring_outer},       {"seed", p.seed}};
    j["train"] = nlohmann::ordered_json::parse(training::to_json(cfg.train));
    return j.dump(1);
}

}  // namespace deskstage::io
