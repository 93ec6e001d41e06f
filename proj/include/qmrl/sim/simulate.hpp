#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "qmrl/sim/meals.hpp"
#include "qmrl/sim/model.hpp"
#include "qmrl/therapy.hpp"

namespace qmrl::sim {

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kNativeSampleMinutes = 5;
inline constexpr int kObservationSampleMinutes = 30;
inline constexpr int kPeriodDays = 14;
inline constexpr int kNativeSamplesPerPeriod = kPeriodDays * kMinutesPerDay / kNativeSampleMinutes;    // 4032
inline constexpr int kObservationLength = kPeriodDays * kMinutesPerDay / kObservationSampleMinutes;    // 672
inline constexpr double kSensorMin = 40.0;
inline constexpr double kSensorMax = 400.0;

struct QmArm {
    therapy::QMPolicy policy;
};
struct CcArm {
    therapy::CCProfile profile;
};
using DosingArm = std::variant<QmArm, CcArm>;

struct DailyVariability {
    double egp_factor = 1.0;
    double sensitivity_factor = 1.0;
};

/// Log-normal sigma giving factors in [0.75, 1.33] at two sigma.
inline constexpr double kVariabilitySigma = 0.14384103622589045;    // ln(4/3) / 2

/// Factors for one day; identity when `enabled` is false.
DailyVariability daily_factors(const VirtualPatient& patient, int day, std::uint64_t seed, bool enabled = true);

/// Copy of the patient with egp_rate and insulin_sensitivity scaled for `day`.
VirtualPatient apply_daily_variability(const VirtualPatient& patient, int day, std::uint64_t seed);

struct PeriodOptions {
    int days = kPeriodDays;
    bool variability = false;
    std::uint64_t seed = 0;    // variability and counting-error stream
    int first_day = 0;         // absolute day index of the first simulated day
};

struct SimTrace {
    std::vector<double> cgm;                  // model glucose every 5 min, unclamped
    std::vector<therapy::DoseRecord> doses;   // boluses delivered in this period
    MealPlan meals;                           // meals actually eaten (up to termination)
    bool terminated_negative_glucose = false;
    int days = kPeriodDays;
    PatientState final_state;

    /// Minutes simulated before termination (or the full period).
    int duration_minutes() const { return static_cast<int>(cgm.size()) * kNativeSampleMinutes; }
};

/// Simulates one period with 1-min RK4. Boluses are given with each meal;
/// basal is a constant infusion. `prior_doses` carry insulin on board from
/// the previous period (times relative to this period's start).
SimTrace simulate_period(const VirtualPatient& patient, const DosingArm& arm, const MealPlan& plan,
                         const PeriodOptions& options, const PatientState& initial,
                         std::span<const therapy::DoseRecord> prior_doses = {});

/// Same, starting from the fasting equilibrium.
SimTrace simulate_period(const VirtualPatient& patient, const DosingArm& arm, const MealPlan& plan,
                         const PeriodOptions& options);

/// Every 6th native sample clamped to the sensor range. Short traces are
/// right-aligned and left-padded with their first value.
std::vector<double> sample_cgm(const SimTrace& trace, int length = kObservationLength);

/// Doses still relevant for insulin on board at the end of `trace`, shifted
/// so that times are relative to the following period.
std::vector<therapy::DoseRecord> carry_over_doses(const SimTrace& trace,
                                                  std::span<const therapy::DoseRecord> prior,
                                                  double dia = therapy::kDiaMinutes);

/// Carbohydrate-counting parameters tuned on the nominal (variability-free)
/// patient: ICR scanned around the area-neutral ratio, CF from the 1800 rule
/// corrected by the same mismatch.
therapy::CCProfile ideal_cc_profile(const VirtualPatient& patient, double counting_error);

/// CSV with columns minute,glucose,insulin,carbs at native resolution.
void write_trace_csv(std::ostream& os, const SimTrace& trace);

}    // namespace qmrl::sim
