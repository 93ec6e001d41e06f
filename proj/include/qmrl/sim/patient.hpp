#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace qmrl::sim {

enum class MealCategory : int { Snack = 0, LessThanUsual = 1, Usual = 2, MoreThanUsual = 3 };

inline constexpr int kNumCategories = 4;

std::string_view category_name(MealCategory c);

/// Physiological constants shared by every virtual patient.
inline constexpr double kGlucoseVolume = 2.2;          // dL/kg, effective (plasma + tissue) volume
inline constexpr double kHepaticOffset = 5.0;          // mg/dL, insulin suppression of hepatic output
inline constexpr double kBasalFractionOfTdd = 0.5;

/// One simulated subject of the surrogate model.
///
/// Glucose dynamics (minutes, mg/dL):
///   dG/dt = egp - Sg*G - X*(G + G0) + Ra(t)
///   dX/dt = p2 * (SI * (ka * S2 - u) - X)
///   dS1/dt = u - ka*S1,  dS2/dt = ka*(S1 - S2)
///   dQ1/dt = -kabs*Q1,   dQ2/dt = kabs*(Q1 - Q2)
///   Ra = f * kabs * Q2 * 1000 / (Vg * BW)
/// X is insulin action above the basal level, so the basal rate u holds G at
/// basal_glucose (egp = Sg * Gb) when no meals are eaten. The G0 offset lets a
/// large enough insulin excess drive glucose through zero.
struct VirtualPatient {
    int id = 0;
    double body_mass = 70.0;                  // kg
    double basal_glucose = 120.0;             // mg/dL
    double insulin_sensitivity = 0.35;        // 1/U, SI: scales absorbed insulin flux into remote action
    double egp_rate = 0.3;                    // mg/dL/min
    double glucose_effectiveness = 0.0025;    // 1/min
    double insulin_clearance = 0.02;          // 1/min, p2
    double sc_absorption_rate = 0.018;        // 1/min, ka
    double gut_absorption_rate = 0.025;       // 1/min, kabs
    double carb_bioavailability = 0.9;        // (0, 1]
    double total_daily_dose = 45.0;           // U/day, twice the daily basal amount
    double basal_rate = 0.0156;               // U/min
    std::array<double, 3> category_thresholds{40.0, 75.0, 110.0};    // grams

    /// Carbohydrate grams offset by one unit of insulin in the glucose-area sense.
    double carb_ratio() const;
    /// Glucose appearance per gram of carbohydrate absorbed (mg/dL).
    double glucose_per_gram() const;
};

/// Draws n patients; patient i depends only on (seed, i).
std::vector<VirtualPatient> generate_population(int n, std::uint64_t seed);

/// Builds a patient from the raw sampled quantities and solves the basal
/// equilibrium. Exposed for tests that need hand-picked parameters.
struct PatientDraw {
    double body_mass;
    double basal_glucose;
    double total_daily_dose;
    double carb_ratio_mismatch;    // true ICR / 500-rule ICR
    double glucose_effectiveness;
    double insulin_clearance;
    double sc_absorption_rate;
    double gut_absorption_rate;
    double carb_bioavailability;
    std::array<double, 3> category_thresholds;
};
VirtualPatient make_patient(int id, const PatientDraw& draw);

/// Ties go to the lower category.
MealCategory categorize_meal(double carbs, const std::array<double, 3>& thresholds);

}    // namespace qmrl::sim
