#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "qmrl/harness/config.hpp"
#include "qmrl/metrics.hpp"

namespace qmrl::harness {

struct Population {
    std::vector<sim::VirtualPatient> train;
    std::vector<sim::VirtualPatient> validation;
};

/// First `train` ids for training, last `validation` ids for validation.
Population split_population(const PopulationConfig& cfg);

struct TrainSummary {
    std::vector<sac::TrainCounters> runs;    // one per seed
};

/// Trains one agent per seed into output_dir/seed_<s>/ and writes the
/// mean and standard error across seeds to output_dir/validation_curve.csv.
/// With `resume`, exactly one seed is allowed.
TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log,
                       const std::optional<std::filesystem::path>& resume = std::nullopt);

/// Per (arm, scenario, patient): metrics of every 14-day period and the trace
/// of the last one.
struct PatientRun {
    int patient_id = 0;
    std::vector<metrics::GlycemicMetrics> periods;
    sim::SimTrace final_trace;
    bool terminated = false;
};

struct ArmRun {
    env::Arm arm = env::Arm::QMDefault;
    sim::ScenarioMode scenario = sim::ScenarioMode::Simple;
    std::vector<PatientRun> patients;
};

/// Runs each requested arm on the validation patients for cfg.weeks weeks
/// (the first period uses the initial policy). Arms share the episode seed
/// of each patient, so meals, variability and the initial QM policy are
/// paired. `agent` is required for the QM-RL arm.
std::vector<ArmRun> evaluate_arms(const ExperimentConfig& cfg, const std::vector<sim::VirtualPatient>& patients,
                                  sac::SacAgent* agent);

void write_outcomes_csv(std::ostream& os, const std::vector<ArmRun>& runs);
void write_timeseries_csv(std::ostream& os, const std::vector<ArmRun>& runs);
void write_patients_csv(std::ostream& os, const std::vector<ArmRun>& runs);
void write_final_traces_csv(std::ostream& os, const std::vector<ArmRun>& runs);

/// Loads the checkpoint (if the QM-RL arm is requested), evaluates and writes
/// outcomes.csv, timeseries.csv, patients.csv, traces_final.csv and
/// profile.csv into cfg.output_dir.
std::vector<ArmRun> cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log);

}    // namespace qmrl::harness
