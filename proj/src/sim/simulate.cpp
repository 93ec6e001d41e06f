#include "qmrl/sim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "qmrl/metrics.hpp"
#include "qmrl/rng.hpp"

namespace qmrl::sim {

DailyVariability daily_factors(const VirtualPatient& patient, int day, std::uint64_t seed, bool enabled) {
    if (!enabled) {
        return {};
    }
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(patient.id), static_cast<std::uint64_t>(day),
                               0x76617269ULL}));
    DailyVariability v;
    v.egp_factor = std::exp(kVariabilitySigma * rng.normal());
    v.sensitivity_factor = std::exp(kVariabilitySigma * rng.normal());
    return v;
}

VirtualPatient apply_daily_variability(const VirtualPatient& patient, int day, std::uint64_t seed) {
    const auto v = daily_factors(patient, day, seed);
    VirtualPatient out = patient;
    out.egp_rate *= v.egp_factor;
    out.insulin_sensitivity *= v.sensitivity_factor;
    return out;
}

SimTrace simulate_period(const VirtualPatient& patient, const DosingArm& arm, const MealPlan& plan,
                         const PeriodOptions& options, const PatientState& initial,
                         std::span<const therapy::DoseRecord> prior_doses) {
    SimTrace trace;
    trace.days = options.days;
    const int total = options.days * kMinutesPerDay;
    trace.cgm.reserve(static_cast<std::size_t>(total / kNativeSampleMinutes));

    std::vector<therapy::DoseRecord> history(prior_doses.begin(), prior_doses.end());
    PatientState state = initial;
    VirtualPatient today = patient;
    int current_day = -1;
    std::size_t next_meal = 0;
    int meal_index = 0;

    for (int t = 0; t < total; ++t) {
        const int day = t / kMinutesPerDay;
        if (day != current_day) {
            current_day = day;
            today = options.variability ? apply_daily_variability(patient, options.first_day + day, options.seed)
                                        : patient;
        }
        if (t % kNativeSampleMinutes == 0) {
            trace.cgm.push_back(state.plasma_glucose);
        }

        OdeInputs inputs;
        inputs.basal = patient.basal_rate;
        while (next_meal < plan.events.size() && plan.events[next_meal].minute <= t) {
            const MealEvent& meal = plan.events[next_meal++];
            inputs.carbs += meal.carbs;
            trace.meals.events.push_back(meal);

            const double glucose = std::clamp(state.plasma_glucose, kSensorMin, kSensorMax);
            const int window = therapy::time_window(t % kMinutesPerDay);
            const double iob = therapy::insulin_on_board(history, t);
            double units = 0.0;
            if (const auto* qm = std::get_if<QmArm>(&arm)) {
                units = therapy::qm_bolus(qm->policy, meal.category, window, glucose, iob);
            } else {
                const auto& cc = std::get<CcArm>(arm);
                const auto meal_seed = derive_seed(
                    options.seed, {0xcc, static_cast<std::uint64_t>(options.first_day + day),
                                   static_cast<std::uint64_t>(meal_index)});
                units = therapy::cc_bolus(cc.profile, meal.carbs, window, glucose, iob, meal_seed);
            }
            ++meal_index;
            if (units > 0.0) {
                const therapy::DoseRecord dose{static_cast<double>(t), units, meal.category, window};
                history.push_back(dose);
                trace.doses.push_back(dose);
                inputs.bolus += units;
            }
        }

        state = step_ode(today, state, inputs, 1.0);
        if (state.plasma_glucose <= 0.0) {
            trace.cgm.push_back(state.plasma_glucose);
            trace.terminated_negative_glucose = true;
            break;
        }
    }
    trace.final_state = state;
    return trace;
}

SimTrace simulate_period(const VirtualPatient& patient, const DosingArm& arm, const MealPlan& plan,
                         const PeriodOptions& options) {
    return simulate_period(patient, arm, plan, options, equilibrium_state(patient));
}

std::vector<double> sample_cgm(const SimTrace& trace, int length) {
    constexpr std::size_t kStride = kObservationSampleMinutes / kNativeSampleMinutes;
    std::vector<double> picked;
    for (std::size_t i = 0; i < trace.cgm.size(); i += kStride) {
        picked.push_back(std::clamp(trace.cgm[i], kSensorMin, kSensorMax));
    }
    const auto n = static_cast<std::size_t>(length);
    if (picked.size() >= n) {
        return {picked.end() - static_cast<std::ptrdiff_t>(n), picked.end()};
    }
    const double pad = picked.empty() ? kSensorMin : picked.front();
    std::vector<double> out(n - picked.size(), pad);
    out.insert(out.end(), picked.begin(), picked.end());
    return out;
}

std::vector<therapy::DoseRecord> carry_over_doses(const SimTrace& trace, std::span<const therapy::DoseRecord> prior,
                                                  double dia) {
    const double shift = static_cast<double>(trace.days * kMinutesPerDay);
    std::vector<therapy::DoseRecord> out;
    auto keep = [&](const therapy::DoseRecord& d) {
        therapy::DoseRecord moved = d;
        moved.minute -= shift;
        if (moved.minute > -dia) {
            out.push_back(moved);
        }
    };
    std::for_each(prior.begin(), prior.end(), keep);
    std::for_each(trace.doses.begin(), trace.doses.end(), keep);
    return out;
}

therapy::CCProfile ideal_cc_profile(const VirtualPatient& patient, double counting_error) {
    const double icr_area = patient.carb_ratio();
    const DayTemplate nominal{{450, 50.0}, {750, 70.0}, {1110, 80.0}};
    const MealPlan plan = plan_from_days({nominal, nominal, nominal}, patient.category_thresholds);

    therapy::CCProfile best;
    best.cf = 3.6 * icr_area;    // 1800/TDD scaled by the same mismatch as the ICR
    best.glucose_target = 120.0;
    double best_score = -1e300;
    for (int k = 0; k <= 12; ++k) {
        const double coverage = 0.70 + 0.05 * k;
        therapy::CCProfile candidate = best;
        candidate.icr.fill(icr_area / coverage);
        const auto trace = simulate_period(patient, CcArm{candidate}, plan, PeriodOptions{.days = 3});
        const auto m = metrics::compute_metrics(trace.cgm, trace.doses, 3.0);
        const double score = metrics::reward(m) - 1e-3 * std::abs(m.mean - 130.0);
        if (score > best_score) {
            best_score = score;
            best.icr = candidate.icr;
        }
    }
    best.counting_error = counting_error;
    return best;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    os << "minute,glucose,insulin,carbs\n";
    std::vector<double> insulin(trace.cgm.size(), 0.0);
    std::vector<double> carbs(trace.cgm.size(), 0.0);
    auto bin = [&](double minute) {
        return std::min(static_cast<std::size_t>(minute / kNativeSampleMinutes), trace.cgm.size() - 1);
    };
    if (!trace.cgm.empty()) {
        for (const auto& d : trace.doses) {
            insulin[bin(d.minute)] += d.units;
        }
        for (const auto& m : trace.meals.events) {
            carbs[bin(m.minute)] += m.carbs;
        }
    }
    for (std::size_t i = 0; i < trace.cgm.size(); ++i) {
        os << fmt::format("{},{},{},{}\n", i * kNativeSampleMinutes, trace.cgm[i], insulin[i], carbs[i]);
    }
}

}    // namespace qmrl::sim
