#include "qmrl/sim/meals.hpp"

#include <algorithm>

namespace qmrl::sim {

namespace {

constexpr int kMainMealTimes[3] = {450, 750, 1110};     // 07:30, 12:30, 18:30
constexpr int kSnackTimes[3] = {600, 930, 1290};         // 10:00, 15:30, 21:30
constexpr int kMainJitter = 60;
constexpr int kSnackJitter = 30;
constexpr double kMainMin = 40.0;
constexpr double kMainMax = 150.0;
constexpr double kSnackMin = 10.0;
constexpr double kSnackMax = 35.0;

}    // namespace

DayTemplate random_day(Rng& rng) {
    DayTemplate day;
    for (int t : kMainMealTimes) {
        day.push_back({t + rng.uniform_int(-kMainJitter, kMainJitter), rng.uniform(kMainMin, kMainMax)});
    }
    const int snacks = rng.uniform_int(0, 2);
    std::array<int, 3> slots{0, 1, 2};
    // Partial Fisher-Yates to choose the snack slots.
    for (int i = 0; i < snacks; ++i) {
        const int j = rng.uniform_int(i, 2);
        std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
        const int t = kSnackTimes[slots[static_cast<std::size_t>(i)]];
        day.push_back({t + rng.uniform_int(-kSnackJitter, kSnackJitter), rng.uniform(kSnackMin, kSnackMax)});
    }
    std::sort(day.begin(), day.end(), [](const DailyMeal& a, const DailyMeal& b) {
        return a.minute_of_day < b.minute_of_day;
    });
    return day;
}

MealPlan plan_from_days(const std::vector<DayTemplate>& days, const std::array<double, 3>& thresholds) {
    MealPlan plan;
    for (std::size_t d = 0; d < days.size(); ++d) {
        for (const auto& m : days[d]) {
            plan.events.push_back(
                {static_cast<int>(d) * 1440 + m.minute_of_day, m.carbs, categorize_meal(m.carbs, thresholds)});
        }
    }
    return plan;
}

MealScenario::MealScenario(const VirtualPatient& patient, std::uint64_t seed, ScenarioMode mode)
    : thresholds_(patient.category_thresholds),
      seed_(derive_seed(seed, {static_cast<std::uint64_t>(patient.id), 0x6d65616cULL})),
      mode_(mode) {
    Rng rng(seed_);
    template_ = random_day(rng);
}

MealPlan MealScenario::plan(int step, int days) const {
    std::vector<DayTemplate> per_day;
    per_day.reserve(static_cast<std::size_t>(days));
    for (int d = 0; d < days; ++d) {
        if (mode_ == ScenarioMode::Simple) {
            per_day.push_back(template_);
        } else {
            Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(d)}));
            per_day.push_back(random_day(rng));
        }
    }
    return plan_from_days(per_day, thresholds_);
}

}    // namespace qmrl::sim
