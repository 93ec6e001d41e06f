#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qmrl/env.hpp"
#include "qmrl/sac/trainer.hpp"

namespace qmrl::harness {

struct PopulationConfig {
    int size = 100;
    int train = 80;         // first ids
    int validation = 20;    // last ids
    std::uint64_t seed = 7;
};

struct ExperimentConfig {
    PopulationConfig population;
    sac::SacConfig sac;
    replay::ReplayConfig replay;
    env::EpisodeConfig episode;    // training episodes

    // training schedule
    int epochs = 2500;
    int batch = 256;
    double replay_ratio = 1.0;
    int validation_every = 25;
    int validation_steps = 13;
    int patience = 0;
    std::vector<std::uint64_t> seeds{1, 2, 3};

    // evaluation
    std::vector<env::Arm> arms{env::Arm::CC, env::Arm::QMDefault, env::Arm::QMR2R, env::Arm::QMRL};
    std::vector<sim::ScenarioMode> scenarios{sim::ScenarioMode::Simple, sim::ScenarioMode::Var};
    int weeks = 26;
    std::uint64_t eval_seed = 11;
    std::filesystem::path checkpoint;

    std::filesystem::path output_dir = "runs";
};

/// Named starting points: "paper" (the full protocol) and "desk" (8 training
/// patients, small network, 300 epochs). Throws on an unknown name.
ExperimentConfig preset(std::string_view name);

/// Overlays a JSON document onto `base`. Unknown keys and invalid values are
/// rejected with std::invalid_argument naming the offending key.
ExperimentConfig apply_json(ExperimentConfig base, const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path, std::string_view preset_name = "paper");

nlohmann::json to_json(const ExperimentConfig& cfg);

/// Checks cross-field constraints (population split, positive sizes, ...).
void validate_config(const ExperimentConfig& cfg);

sac::TrainConfig train_config(const ExperimentConfig& cfg, std::uint64_t seed);

std::string_view arm_name(env::Arm arm);
env::Arm parse_arm(std::string_view name);
std::string_view scenario_name(sim::ScenarioMode mode);
sim::ScenarioMode parse_scenario(std::string_view name);

}    // namespace qmrl::harness
