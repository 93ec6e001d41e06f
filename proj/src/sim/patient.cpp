#include "qmrl/sim/patient.hpp"

#include <stdexcept>

#include "qmrl/rng.hpp"

namespace qmrl::sim {

namespace {

// Population ranges. Every quantity is log-uniform unless marked otherwise.
//
//   quantity                       low      high     unit
//   body_mass                      55       100      kg
//   basal_glucose                  110      140      mg/dL
//   total_daily_dose               25       70       U/day
//   carb_ratio_mismatch            0.7      1.45     -       (true ICR over 500/TDD)
//   glucose_effectiveness          0.0015   0.004    1/min
//   insulin_clearance              0.015    0.03     1/min
//   sc_absorption_rate             0.015    0.028    1/min
//   gut_absorption_rate            0.012    0.025    1/min
//   carb_bioavailability           0.8      1.0      -       (uniform)
//   threshold m1                   10       50       g       (uniform)
//   threshold m2                   60       90       g       (uniform)
//   threshold m3                   100      120      g       (uniform)
struct Range {
    double lo;
    double hi;
};
constexpr Range kBodyMass{55.0, 100.0};
constexpr Range kBasalGlucose{110.0, 140.0};
constexpr Range kTotalDailyDose{25.0, 70.0};
constexpr Range kCarbRatioMismatch{0.7, 1.45};
constexpr Range kGlucoseEffectiveness{0.0015, 0.004};
constexpr Range kInsulinClearance{0.015, 0.03};
constexpr Range kScAbsorption{0.015, 0.028};
constexpr Range kGutAbsorption{0.012, 0.025};
constexpr Range kBioavailability{0.8, 1.0};
constexpr Range kThreshold1{10.0, 50.0};
constexpr Range kThreshold2{60.0, 90.0};
constexpr Range kThreshold3{100.0, 120.0};

double log_uniform(Rng& rng, Range r) { return rng.log_uniform(r.lo, r.hi); }
double uniform(Rng& rng, Range r) { return rng.uniform(r.lo, r.hi); }

}    // namespace

std::string_view category_name(MealCategory c) {
    switch (c) {
        case MealCategory::Snack: return "Snack";
        case MealCategory::LessThanUsual: return "LessThanUsual";
        case MealCategory::Usual: return "Usual";
        case MealCategory::MoreThanUsual: return "MoreThanUsual";
    }
    return "?";
}

double VirtualPatient::glucose_per_gram() const {
    return carb_bioavailability * 1000.0 / (kGlucoseVolume * body_mass);
}

double VirtualPatient::carb_ratio() const {
    return insulin_sensitivity * (basal_glucose + kHepaticOffset) / glucose_per_gram();
}

VirtualPatient make_patient(int id, const PatientDraw& d) {
    VirtualPatient p;
    p.id = id;
    p.body_mass = d.body_mass;
    p.basal_glucose = d.basal_glucose;
    p.total_daily_dose = d.total_daily_dose;
    p.glucose_effectiveness = d.glucose_effectiveness;
    p.insulin_clearance = d.insulin_clearance;
    p.sc_absorption_rate = d.sc_absorption_rate;
    p.gut_absorption_rate = d.gut_absorption_rate;
    p.carb_bioavailability = d.carb_bioavailability;
    p.category_thresholds = d.category_thresholds;

    // Linearising around basal, one unit of insulin removes SI*(Gb+G0) mg/dL of
    // glucose (times 1/Sg in area) and one gram adds glucose_per_gram. Their
    // ratio is the area-neutral carb ratio, pinned to the 500-rule value times
    // a per-patient mismatch.
    const double icr = 500.0 / d.total_daily_dose * d.carb_ratio_mismatch;
    p.insulin_sensitivity = icr * p.glucose_per_gram() / (d.basal_glucose + kHepaticOffset);
    p.basal_rate = kBasalFractionOfTdd * d.total_daily_dose / 1440.0;
    p.egp_rate = p.glucose_effectiveness * p.basal_glucose;
    return p;
}

std::vector<VirtualPatient> generate_population(int n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("generate_population: n must be >= 1");
    }
    std::vector<VirtualPatient> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i), 0x70617469656e74ULL}));
        PatientDraw d{};
        d.body_mass = log_uniform(rng, kBodyMass);
        d.basal_glucose = log_uniform(rng, kBasalGlucose);
        d.total_daily_dose = log_uniform(rng, kTotalDailyDose);
        d.carb_ratio_mismatch = log_uniform(rng, kCarbRatioMismatch);
        d.glucose_effectiveness = log_uniform(rng, kGlucoseEffectiveness);
        d.insulin_clearance = log_uniform(rng, kInsulinClearance);
        d.sc_absorption_rate = log_uniform(rng, kScAbsorption);
        d.gut_absorption_rate = log_uniform(rng, kGutAbsorption);
        d.carb_bioavailability = uniform(rng, kBioavailability);
        d.category_thresholds = {uniform(rng, kThreshold1), uniform(rng, kThreshold2), uniform(rng, kThreshold3)};
        out.push_back(make_patient(i, d));
    }
    return out;
}

MealCategory categorize_meal(double carbs, const std::array<double, 3>& m) {
    if (carbs <= m[0]) {
        return MealCategory::Snack;
    }
    if (carbs <= m[1]) {
        return MealCategory::LessThanUsual;
    }
    if (carbs <= m[2]) {
        return MealCategory::Usual;
    }
    return MealCategory::MoreThanUsual;
}

}    // namespace qmrl::sim
