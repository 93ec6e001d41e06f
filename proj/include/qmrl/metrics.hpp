#pragma once

#include <span>
#include <utility>

#include "qmrl/therapy.hpp"

namespace qmrl::metrics {

/// Consensus CGM outcomes; percentages are in [0, 100].
struct GlycemicMetrics {
    double tbr2 = 0.0;           // % time < 54
    double tbr1 = 0.0;           // % time < 70
    double tir = 0.0;            // % time in [70, 180]
    double tar1 = 0.0;           // % time > 180
    double tar2 = 0.0;           // % time > 250
    double mean = 0.0;           // mg/dL
    double sd = 0.0;             // mg/dL, population SD
    double total_bolus = 0.0;    // mean bolus insulin per day, U
};

struct RewardThresholds {
    double t54 = 1.0;
    double t70 = 4.0;
    double t180 = 25.0;
    double t250 = 5.0;
};

inline constexpr RewardThresholds kRewardThresholds{};

/// Throws std::invalid_argument on an empty series. `days` normalises the
/// bolus total to a daily figure; pass 0 to derive it from the series length
/// at 5-min resolution.
GlycemicMetrics compute_metrics(std::span<const double> glucose, std::span<const therapy::DoseRecord> doses,
                                double days = 0.0);

/// Nonnegative penalties (r_hypo, r_hyper).
std::pair<double, double> r2r_components(const GlycemicMetrics& m, const RewardThresholds& th = kRewardThresholds);

/// -(r_hypo + r_hyper) when any threshold is exceeded, otherwise max(TIR/71 - 1, 0).
double reward(const GlycemicMetrics& m, const RewardThresholds& th = kRewardThresholds);

}    // namespace qmrl::metrics
