#include "qmrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmrl::metrics {

GlycemicMetrics compute_metrics(std::span<const double> glucose, std::span<const therapy::DoseRecord> doses,
                                double days) {
    if (glucose.empty()) {
        throw std::invalid_argument("compute_metrics: empty glucose series");
    }
    std::size_t below54 = 0;
    std::size_t below70 = 0;
    std::size_t above180 = 0;
    std::size_t above250 = 0;
    double sum = 0.0;
    for (double g : glucose) {
        below54 += g < 54.0;
        below70 += g < 70.0;
        above180 += g > 180.0;
        above250 += g > 250.0;
        sum += g;
    }
    const auto n = static_cast<double>(glucose.size());
    GlycemicMetrics m;
    m.tbr2 = 100.0 * static_cast<double>(below54) / n;
    m.tbr1 = 100.0 * static_cast<double>(below70) / n;
    m.tar1 = 100.0 * static_cast<double>(above180) / n;
    m.tar2 = 100.0 * static_cast<double>(above250) / n;
    m.tir = 100.0 * static_cast<double>(glucose.size() - below70 - above180) / n;
    m.mean = sum / n;
    double ss = 0.0;
    for (double g : glucose) {
        ss += (g - m.mean) * (g - m.mean);
    }
    m.sd = std::sqrt(ss / n);

    if (days <= 0.0) {
        days = n * 5.0 / 1440.0;
    }
    double insulin = 0.0;
    for (const auto& d : doses) {
        insulin += d.units;
    }
    m.total_bolus = insulin / days;
    return m;
}

std::pair<double, double> r2r_components(const GlycemicMetrics& m, const RewardThresholds& th) {
    const double hypo = std::max(m.tbr2 / th.t54 - 1.0, 0.0) + std::max(m.tbr1 / th.t70 - 1.0, 0.0);
    const double hyper = std::max(m.tar1 / th.t180 - 1.0, 0.0) + std::max(m.tar2 / th.t250 - 1.0, 0.0);
    return {hypo, hyper};
}

double reward(const GlycemicMetrics& m, const RewardThresholds& th) {
    const auto [hypo, hyper] = r2r_components(m, th);
    const double penalty = hypo + hyper;
    if (penalty > 0.0) {
        return -penalty;
    }
    return std::max(m.tir / (100.0 - th.t180 - th.t70) - 1.0, 0.0);
}

}    // namespace qmrl::metrics
