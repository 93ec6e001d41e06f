#pragma once

#include <array>

#include "qmrl/sim/patient.hpp"

namespace qmrl::sim {

struct PatientState {
    double plasma_glucose = 0.0;              // mg/dL
    double remote_insulin_effect = 0.0;       // 1/min
    std::array<double, 2> sc_insulin_depots{};    // U
    std::array<double, 2> gut_compartments{};     // g
    double clock = 0.0;                       // minutes since scenario start
};

struct OdeInputs {
    double basal = 0.0;    // U/min, held constant over the step
    double bolus = 0.0;    // U, added to the first depot before the step
    double carbs = 0.0;    // g, added to the first gut compartment before the step
};

/// Fasting steady state at the patient's basal rate.
PatientState equilibrium_state(const VirtualPatient& patient);

/// Time derivative of the state (clock excluded).
std::array<double, 6> ode_rhs(const VirtualPatient& patient, const std::array<double, 6>& x, double basal);

/// One classic RK4 step. Production runs use dt = 1 min; smaller steps are
/// accepted for convergence studies.
PatientState step_ode(const VirtualPatient& patient, const PatientState& state, const OdeInputs& inputs, double dt);

}    // namespace qmrl::sim
