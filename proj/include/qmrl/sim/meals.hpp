#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qmrl/rng.hpp"
#include "qmrl/sim/patient.hpp"

namespace qmrl::sim {

struct MealEvent {
    int minute = 0;    // minutes from the start of the period
    double carbs = 0.0;
    MealCategory category = MealCategory::Snack;

    bool operator==(const MealEvent&) const = default;
};

/// Meals for one simulated period, sorted by minute.
struct MealPlan {
    std::vector<MealEvent> events;

    bool operator==(const MealPlan&) const = default;
};

enum class ScenarioMode { Simple, Var };

/// Meals for one day as (minute of day, grams).
struct DailyMeal {
    int minute_of_day;
    double carbs;
    bool operator==(const DailyMeal&) const = default;
};
using DayTemplate = std::vector<DailyMeal>;

/// Three main meals (07:30, 12:30, 18:30 +/- 60 min, 40-150 g) plus 0-2 snacks
/// (10:00, 15:30, 21:30 +/- 30 min, 10-35 g). Times strictly increase.
DayTemplate random_day(Rng& rng);

/// Source of meal plans for one episode. Simple repeats a single daily
/// template for the whole episode; Var draws every day afresh.
class MealScenario {
  public:
    MealScenario(const VirtualPatient& patient, std::uint64_t seed, ScenarioMode mode);

    /// Plan for the given step (0-based) covering `days` days.
    MealPlan plan(int step, int days = 14) const;

    ScenarioMode mode() const { return mode_; }
    const DayTemplate& simple_template() const { return template_; }

  private:
    std::array<double, 3> thresholds_;
    std::uint64_t seed_;
    ScenarioMode mode_;
    DayTemplate template_;
};

MealPlan plan_from_days(const std::vector<DayTemplate>& days, const std::array<double, 3>& thresholds);

}    // namespace qmrl::sim
