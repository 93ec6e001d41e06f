#include "qmrl/env.hpp"

#include <stdexcept>

namespace qmrl::env {

std::uint64_t episode_seed(std::uint64_t seed, int patient_id, std::uint64_t episode) {
    return derive_seed(seed, {static_cast<std::uint64_t>(patient_id), episode, 0x657069736f6465ULL});
}

PatientEnv::PatientEnv(const sim::VirtualPatient& patient, const EpisodeConfig& config, bool cc)
    : patient_(patient), config_(config), cc_(cc) {
    if (config.max_steps < 1 || config.step_days < 1) {
        throw std::invalid_argument("PatientEnv: max_steps and step_days must be positive");
    }
    if (cc_) {
        cc_profile_ = sim::ideal_cc_profile(patient, config.variability() ? 0.2 : 0.0);
    }
}

std::shared_ptr<const sac::Observation> PatientEnv::reset(std::uint64_t seed, std::uint64_t episode) {
    episode_seed_ = env::episode_seed(seed, patient_.id, episode);
    policy_ = therapy::random_qm_policy(patient_, derive_seed(episode_seed_, {1}));
    scenario_ = std::make_unique<sim::MealScenario>(patient_, derive_seed(episode_seed_, {2}), config_.mode);
    state_ = sim::equilibrium_state(patient_);
    carried_.clear();
    period_ = 0;
    step_ = 0;
    done_ = false;
    run_period();
    if (trace_.terminated_negative_glucose) {
        done_ = true;
    }
    return observation_;
}

void PatientEnv::run_period() {
    const auto plan = scenario_->plan(period_, config_.step_days);
    sim::PeriodOptions opt;
    opt.days = config_.step_days;
    opt.variability = config_.variability();
    opt.seed = derive_seed(episode_seed_, {3});
    opt.first_day = period_ * config_.step_days;
    const sim::DosingArm arm = cc_ ? sim::DosingArm{sim::CcArm{cc_profile_}} : sim::DosingArm{sim::QmArm{policy_}};
    trace_ = sim::simulate_period(patient_, arm, plan, opt, state_, carried_);
    ++simulations_;
    observation_ = std::make_shared<const sac::Observation>(sac::encode_state(trace_, carried_));
    carried_ = sim::carry_over_doses(trace_, carried_);
    state_ = trace_.final_state;
    ++period_;
}

StepResult PatientEnv::step(const therapy::Action& action) {
    if (done_) {
        throw std::logic_error("PatientEnv::step: episode is over; call reset");
    }
    if (!cc_) {
        policy_ = therapy::apply_action(policy_, action, config_.action_scale);
    }
    run_period();
    ++step_;

    StepResult r;
    r.observation = observation_;
    r.metrics = metrics::compute_metrics(trace_.cgm, trace_.doses,
                                         trace_.terminated_negative_glucose ? 0.0 : config_.step_days);
    r.reward = metrics::reward(r.metrics);
    r.terminal = trace_.terminated_negative_glucose;
    r.done = r.terminal || step_ >= config_.max_steps;
    done_ = r.done;
    return r;
}

}    // namespace qmrl::env
