#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "qmrl/metrics.hpp"
#include "qmrl/sac/encoding.hpp"
#include "qmrl/sim/meals.hpp"
#include "qmrl/sim/simulate.hpp"
#include "qmrl/therapy.hpp"

namespace qmrl::env {

enum class Arm { CC, QMDefault, QMR2R, QMRL };

struct EpisodeConfig {
    sim::ScenarioMode mode = sim::ScenarioMode::Simple;
    int max_steps = 64;
    int step_days = sim::kPeriodDays;
    double action_scale = therapy::kDefaultActionScale;
    /// Daily parameter variability; follows the scenario unless overridden.
    bool variability() const { return mode == sim::ScenarioMode::Var; }
};

struct StepResult {
    std::shared_ptr<const sac::Observation> observation;
    double reward = 0.0;
    bool done = false;        // episode over (terminal or step limit)
    bool terminal = false;    // negative glucose; no bootstrapping past it
    metrics::GlycemicMetrics metrics;
};

/// One simulated subject running episodes of 14-day steps. The physiological
/// state and the insulin still on board carry over between steps.
class PatientEnv {
  public:
    /// `cc` selects the carbohydrate-counting arm, for which actions are ignored.
    PatientEnv(const sim::VirtualPatient& patient, const EpisodeConfig& config, bool cc = false);

    /// Starts episode `episode` under `seed`: a fresh random QM policy, a
    /// fresh meal scenario and one warm-up step that yields the first observation.
    std::shared_ptr<const sac::Observation> reset(std::uint64_t seed, std::uint64_t episode = 0);

    /// Applies the action to the policy and simulates the next step. Throws
    /// std::logic_error if the episode is over.
    StepResult step(const therapy::Action& action);

    const therapy::QMPolicy& policy() const { return policy_; }
    const sim::VirtualPatient& patient() const { return patient_; }
    const sim::SimTrace& last_trace() const { return trace_; }
    const sim::MealScenario& scenario() const { return *scenario_; }
    const std::shared_ptr<const sac::Observation>& observation() const { return observation_; }
    int steps_taken() const { return step_; }
    bool done() const { return done_; }
    std::uint64_t episode_seed() const { return episode_seed_; }
    /// Number of 14-day simulations run so far, warm-ups included.
    long simulations() const { return simulations_; }

  private:
    void run_period();

    sim::VirtualPatient patient_;
    EpisodeConfig config_;
    bool cc_ = false;
    therapy::CCProfile cc_profile_;
    therapy::QMPolicy policy_;
    std::unique_ptr<sim::MealScenario> scenario_;
    sim::SimTrace trace_;
    sim::PatientState state_;
    std::vector<therapy::DoseRecord> carried_;
    std::shared_ptr<const sac::Observation> observation_;
    std::uint64_t episode_seed_ = 0;
    int period_ = 0;
    int step_ = 0;
    bool done_ = true;
    long simulations_ = 0;
};

/// Seed shared by every arm for the same (patient, episode), keeping arm
/// comparisons paired.
std::uint64_t episode_seed(std::uint64_t seed, int patient_id, std::uint64_t episode);

}    // namespace qmrl::env
