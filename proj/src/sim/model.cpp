#include "qmrl/sim/model.hpp"

#include <stdexcept>

namespace qmrl::sim {

namespace {

using Vec6 = std::array<double, 6>;
enum : std::size_t { kG = 0, kX = 1, kS1 = 2, kS2 = 3, kQ1 = 4, kQ2 = 5 };

Vec6 pack(const PatientState& s) {
    return {s.plasma_glucose, s.remote_insulin_effect, s.sc_insulin_depots[0], s.sc_insulin_depots[1],
            s.gut_compartments[0], s.gut_compartments[1]};
}

PatientState unpack(const Vec6& x, double clock) {
    PatientState s;
    s.plasma_glucose = x[kG];
    s.remote_insulin_effect = x[kX];
    s.sc_insulin_depots = {x[kS1], x[kS2]};
    s.gut_compartments = {x[kQ1], x[kQ2]};
    s.clock = clock;
    return s;
}

Vec6 axpy(const Vec6& x, double a, const Vec6& k) {
    Vec6 r;
    for (std::size_t i = 0; i < 6; ++i) {
        r[i] = x[i] + a * k[i];
    }
    return r;
}

}    // namespace

Vec6 ode_rhs(const VirtualPatient& p, const Vec6& x, double basal) {
    const double ka = p.sc_absorption_rate;
    const double kabs = p.gut_absorption_rate;
    const double ra = p.glucose_per_gram() * kabs * x[kQ2];
    Vec6 d;
    d[kG] = p.egp_rate - p.glucose_effectiveness * x[kG] - x[kX] * (x[kG] + kHepaticOffset) + ra;
    d[kX] = p.insulin_clearance * (p.insulin_sensitivity * (ka * x[kS2] - p.basal_rate) - x[kX]);
    d[kS1] = basal - ka * x[kS1];
    d[kS2] = ka * (x[kS1] - x[kS2]);
    d[kQ1] = -kabs * x[kQ1];
    d[kQ2] = kabs * (x[kQ1] - x[kQ2]);
    return d;
}

PatientState equilibrium_state(const VirtualPatient& p) {
    PatientState s;
    const double depot = p.basal_rate / p.sc_absorption_rate;
    s.sc_insulin_depots = {depot, depot};
    s.remote_insulin_effect = 0.0;
    s.plasma_glucose = p.egp_rate / p.glucose_effectiveness;
    return s;
}

PatientState step_ode(const VirtualPatient& p, const PatientState& state, const OdeInputs& in, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("step_ode: dt must be positive");
    }
    Vec6 x = pack(state);
    x[kS1] += in.bolus;
    x[kQ1] += in.carbs;
    const Vec6 k1 = ode_rhs(p, x, in.basal);
    const Vec6 k2 = ode_rhs(p, axpy(x, 0.5 * dt, k1), in.basal);
    const Vec6 k3 = ode_rhs(p, axpy(x, 0.5 * dt, k2), in.basal);
    const Vec6 k4 = ode_rhs(p, axpy(x, dt, k3), in.basal);
    Vec6 out;
    for (std::size_t i = 0; i < 6; ++i) {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return unpack(out, state.clock + dt);
}

}    // namespace qmrl::sim
