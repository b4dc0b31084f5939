#pragma once

#include <filesystem>
#include <string>

#include "deskstage/capture/plan.hpp"
#include "deskstage/training/config.hpp"

namespace deskstage::io {

/// Contents of a YAML config file. Sections `scene`, `head`, `simulation`
/// and `train` are all optional; unknown keys are rejected.
struct ProjectConfig {
    capture::SimulationPlan plan;
    std::string head_model = "default";  // "default" | "sphere"
    double sphere_radius = 0.1;
    training::TrainConfig train;

    capture::HeadProxy head() const;
};

ProjectConfig parse_config(const std::string& yaml_text);
ProjectConfig load_config(const std::filesystem::path& path);

/// Deterministic JSON rendering of every resolved setting.
std::string config_snapshot(const ProjectConfig& cfg);

}  // namespace deskstage::io
