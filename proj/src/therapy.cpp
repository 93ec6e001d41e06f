#include "qmrl/therapy.hpp"

#include <algorithm>
#include <cmath>

#include "qmrl/rng.hpp"

namespace qmrl::therapy {

int time_window(double minute_of_day) {
    double m = std::fmod(minute_of_day, 1440.0);
    if (m < 0.0) {
        m += 1440.0;
    }
    const double shifted = std::fmod(m - 180.0 + 1440.0, 1440.0);
    return std::min(static_cast<int>(shifted / 240.0), kNumTimeWindows - 1);
}

double insulin_activity(double elapsed, double dia) {
    if (elapsed < 0.0) {
        return 0.0;
    }
    return std::max(0.0, 1.0 - elapsed / dia);
}

double insulin_on_board(std::span<const DoseRecord> history, double now, double dia) {
    double iob = 0.0;
    for (const auto& d : history) {
        if (d.minute <= now) {
            iob += d.units * insulin_activity(now - d.minute, dia);
        }
    }
    return iob;
}

double qm_bolus(const QMPolicy& policy, MealCategory category, int window, double glucose, double iob) {
    const double meal = policy.category_dose[static_cast<std::size_t>(category)] *
                        policy.time_coefficient[static_cast<std::size_t>(window)];
    const double correction = std::max((glucose - policy.glucose_target) / policy.isf, 0.0);
    return std::max(meal + correction - iob, 0.0);
}

double cc_bolus(const CCProfile& profile, double true_carbs, int window, double glucose, double iob,
                std::uint64_t seed) {
    double counted = true_carbs;
    if (profile.counting_error > 0.0) {
        Rng rng(seed);
        counted *= 1.0 + rng.uniform(-profile.counting_error, profile.counting_error);
    }
    const double meal = counted / profile.icr[static_cast<std::size_t>(window)];
    const double correction = std::max((glucose - profile.glucose_target) / profile.cf, 0.0);
    return std::max(meal + correction - iob, 0.0);
}

QMPolicy apply_action(const QMPolicy& policy, const Action& action, double action_scale) {
    QMPolicy next = policy;
    for (std::size_t i = 0; i < kNumCategories; ++i) {
        const double delta = std::clamp(action[i], -1.0, 1.0);
        next.category_dose[i] =
            std::clamp(policy.category_dose[i] * (1.0 + action_scale * delta), kMinCategoryDose, kMaxCategoryDose);
    }
    for (std::size_t j = 0; j < kNumTimeWindows; ++j) {
        const double delta = std::clamp(action[kNumCategories + j], -1.0, 1.0);
        next.time_coefficient[j] = std::clamp(policy.time_coefficient[j] * (1.0 + action_scale * delta),
                                              kMinTimeCoefficient, kMaxTimeCoefficient);
    }
    return next;
}

std::array<double, kNumCategories> category_midpoints(const std::array<double, 3>& m) {
    // Largest generated meal is 150 g, so "more than usual" spans (m3, 150].
    return {0.5 * m[0], 0.5 * (m[0] + m[1]), 0.5 * (m[1] + m[2]), 0.5 * (m[2] + 150.0)};
}

QMPolicy random_qm_policy(const sim::VirtualPatient& patient, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(patient.id), 0x716d706f6cULL}));
    const double icr_rule = 500.0 / patient.total_daily_dose;
    const auto mid = category_midpoints(patient.category_thresholds);
    QMPolicy p;
    for (std::size_t i = 0; i < kNumCategories; ++i) {
        p.category_dose[i] =
            std::clamp(mid[i] / icr_rule * rng.uniform(0.3, 1.7), kMinCategoryDose, kMaxCategoryDose);
    }
    for (auto& a : p.time_coefficient) {
        a = rng.uniform(0.7, 1.3);
    }
    p.glucose_target = 120.0;
    p.isf = 1800.0 / patient.total_daily_dose;
    return p;
}

}    // namespace qmrl::therapy
