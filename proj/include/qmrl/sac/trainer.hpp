#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmrl/env.hpp"
#include "qmrl/replay.hpp"
#include "qmrl/sac/agent.hpp"

namespace qmrl::sac {

struct TrainConfig {
    SacConfig sac;
    replay::ReplayConfig replay;
    env::EpisodeConfig episode;            // training episodes (Simple by default)
    int epochs = 2500;
    int batch = 256;
    double replay_ratio = 1.0;             // gradient iterations per collected transition
    int validation_every = 25;
    int validation_steps = 13;             // 26 weeks of 14-day steps
    sim::ScenarioMode validation_mode = sim::ScenarioMode::Var;
    int patience = 0;                      // validations without improvement before stopping; 0 disables
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;      // empty: no files written
};

struct ValidationResult {
    double r_val = 0.0;           // mean over patients of sum_i gamma^(T-1-i) r_i
    double mean_reward = 0.0;     // mean per-step reward
    double mean_tir = 0.0;        // mean TIR over all steps
    double final_tir = 0.0;       // mean TIR of the last step
};

struct EpochLog {
    int epoch = 0;
    long transitions = 0;          // collected this epoch
    long gradient_iterations = 0;  // this epoch
    double mean_reward = 0.0;      // mean reward of the collected transitions
    double critic_loss = 0.0;
    double alpha = 0.0;
    std::optional<ValidationResult> validation;
};

struct TrainCounters {
    long warmup_transitions = 0;
    long epoch_transitions = 0;
    long gradient_iterations = 0;
    long simulations = 0;          // every 14-day simulation, warm-ups and resets included
    int epochs_run = 0;
    int best_epoch = -1;
    double best_r_val = 0.0;
    bool early_stopped = false;
};

/// Discounted validation return for a reward sequence.
double discounted_return(const std::vector<double>& rewards, double gamma);

/// Deterministic rollout of the agent (action tanh(mu)) on the validation
/// patients for `steps` steps of the validation scenario.
ValidationResult validate(SacAgent& agent, const std::vector<sim::VirtualPatient>& patients, int steps,
                          sim::ScenarioMode mode, double gamma, std::uint64_t seed);

/// Algorithm 1: per epoch, one transition per training patient, then
/// replay_ratio * patients gradient iterations on prioritized batches.
/// Before the first epoch the buffer is filled to one batch with exploratory
/// transitions.
class Trainer {
  public:
    Trainer(const TrainConfig& cfg, std::vector<sim::VirtualPatient> train, std::vector<sim::VirtualPatient> validation);

    /// Loads agent weights from a checkpoint and continues after its epoch.
    void resume(const std::filesystem::path& checkpoint);

    TrainCounters run(const std::function<void(const EpochLog&)>& on_epoch = {});

    /// Runs a single epoch (warm-up first if the buffer is short).
    EpochLog run_epoch();

    SacAgent& agent() { return agent_; }
    const replay::PrioritizedReplay& buffer() const { return buffer_; }
    const TrainCounters& counters() const { return counters_; }
    int next_epoch() const { return epoch_ + 1; }
    long iterations_per_epoch() const;
    /// Simulations the epoch loop performs over the full schedule.
    long planned_epoch_simulations() const;

  private:
    void warm_up();
    void collect(bool random_actions, long& count, double* reward_sum);

    TrainConfig cfg_;
    std::vector<sim::VirtualPatient> train_;
    std::vector<sim::VirtualPatient> validation_;
    SacAgent agent_;
    replay::PrioritizedReplay buffer_;
    std::vector<env::PatientEnv> envs_;
    std::vector<std::uint64_t> episodes_;
    Rng rng_;
    TrainCounters counters_;
    int epoch_ = 0;
    int since_best_ = 0;
};

/// Checkpoint = binary container with all agent arrays plus manifest.json
/// alongside (seed, epoch, network sizes).
void save_agent(SacAgent& agent, const std::filesystem::path& path, std::uint64_t seed, int epoch);
/// Returns the epoch recorded in the manifest.
int load_agent(SacAgent& agent, const std::filesystem::path& path);
/// Reads the network configuration recorded next to a checkpoint.
NetworkConfig checkpoint_network(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}    // namespace qmrl::sac
