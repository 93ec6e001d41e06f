#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "qmrl/sim/patient.hpp"

namespace qmrl::therapy {

using sim::MealCategory;
using sim::kNumCategories;

inline constexpr int kNumTimeWindows = 6;
inline constexpr int kActionDim = kNumCategories + kNumTimeWindows;
inline constexpr double kDiaMinutes = 300.0;
inline constexpr double kDefaultActionScale = 0.3;    // a_max: largest relative change per step

inline constexpr double kMinCategoryDose = 0.0;
inline constexpr double kMaxCategoryDose = 30.0;
inline constexpr double kMinTimeCoefficient = 0.2;
inline constexpr double kMaxTimeCoefficient = 3.0;

/// Ten policy deltas: category deltas first, then time-window deltas. Each in [-1, 1].
using Action = std::array<double, kActionDim>;

/// Windows are 4 h wide starting at 03:00: 0 = 03-07, 1 = 07-11, ..., 5 = 23-03.
int time_window(double minute_of_day);

struct DoseRecord {
    double minute = 0.0;    // relative to the start of the period that logged it
    double units = 0.0;
    MealCategory category = MealCategory::Snack;
    int window = 0;
};

/// Piecewise-linear fraction of a bolus still active after `elapsed` minutes.
double insulin_activity(double elapsed, double dia = kDiaMinutes);

/// Sum of dose * activity(now - t) over the history. Doses after `now` are ignored.
double insulin_on_board(std::span<const DoseRecord> history, double now, double dia = kDiaMinutes);

struct QMPolicy {
    std::array<double, kNumCategories> category_dose{};      // b_c, U
    std::array<double, kNumTimeWindows> time_coefficient{};  // alpha_t
    double glucose_target = 120.0;                           // mg/dL
    double isf = 40.0;                                       // mg/dL per U

    bool operator==(const QMPolicy&) const = default;
};

/// Bolus for a categorized meal: b_c * alpha_t + max((G - Gt)/ISF, 0) - IOB, floored at 0.
double qm_bolus(const QMPolicy& policy, MealCategory category, int window, double glucose, double iob);

struct CCProfile {
    std::array<double, kNumTimeWindows> icr{};    // g/U
    double cf = 40.0;                              // mg/dL per U
    double glucose_target = 120.0;
    double counting_error = 0.0;                   // 0 for precise, 0.2 for +/-20 %
};

/// Carbohydrate-counting bolus. With a nonzero counting error the counted
/// grams are true_carbs * (1 + e), e ~ U(-err, err) seeded by `seed`.
double cc_bolus(const CCProfile& profile, double true_carbs, int window, double glucose, double iob,
                std::uint64_t seed);

/// Multiplicative update b <- clamp(b * (1 + a_max * db)), alpha likewise.
QMPolicy apply_action(const QMPolicy& policy, const Action& action, double action_scale = kDefaultActionScale);

/// Starting strategy for an episode: category doses near the 500-rule coverage
/// of each category's typical carbs, scaled by U(0.3, 1.7); alpha ~ U(0.7, 1.3).
QMPolicy random_qm_policy(const sim::VirtualPatient& patient, std::uint64_t seed);

/// Typical grams for each category, used for seeding doses.
std::array<double, kNumCategories> category_midpoints(const std::array<double, 3>& thresholds);

}    // namespace qmrl::therapy
