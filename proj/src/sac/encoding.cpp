#include "qmrl/sac/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmrl::sac {

namespace {

const double kLogMin = std::log(sim::kSensorMin);
const double kLogMax = std::log(sim::kSensorMax);

constexpr int kSlotMinutes = sim::kObservationSampleMinutes;

int slot_of(double minute) { return static_cast<int>(std::floor(minute / kSlotMinutes)); }

}    // namespace

double normalize_cgm(double glucose) {
    const double g = std::clamp(glucose, sim::kSensorMin, sim::kSensorMax);
    return (2.0 * std::log(g) - (kLogMax + kLogMin)) / (kLogMax - kLogMin);
}

double denormalize_cgm(double value) {
    return std::exp(0.5 * (value * (kLogMax - kLogMin) + kLogMax + kLogMin));
}

void Observation::write_channels(Mat& packed, int b, int batch) const {
    auto at = [&](int channel, int slot) -> double& {
        return packed(channel, static_cast<Eigen::Index>(slot) * batch + b);
    };
    for (int t = 0; t < kObsLength; ++t) {
        at(0, t) = static_cast<double>(cgm[static_cast<std::size_t>(t)]);
        for (int c = 1; c < kObsChannels; ++c) {
            at(c, t) = 0.0;
        }
    }
    for (const auto& e : meals) {
        if (e.slot >= 0 && e.slot < kObsLength) {
            at(1 + e.category, e.slot) = 1.0;
        }
    }
    const int active_slots = static_cast<int>(std::ceil(therapy::kDiaMinutes / kSlotMinutes));
    for (const auto& e : doses) {
        const int ch = 1 + sim::kNumCategories + e.category;
        for (int k = 0; k < active_slots; ++k) {
            const int s = e.slot + k;
            if (s < 0 || s >= kObsLength) {
                continue;
            }
            double& v = at(ch, s);
            v = std::max(v, therapy::insulin_activity(k * kSlotMinutes));
        }
    }
}

Mat Observation::dense() const {
    Mat out(kObsChannels, kObsLength);
    write_channels(out, 0, 1);
    return out;
}

Observation encode_state(const sim::SimTrace& trace, std::span<const therapy::DoseRecord> prior_doses) {
    Observation obs;
    const auto cgm = sim::sample_cgm(trace, kObsLength);
    obs.cgm.resize(cgm.size());
    std::transform(cgm.begin(), cgm.end(), obs.cgm.begin(),
                   [](double g) { return static_cast<float>(normalize_cgm(g)); });
    // Short traces are right-aligned by sample_cgm; shift events the same way.
    const int missing = kObsLength - static_cast<int>((trace.cgm.size() + 5) / 6);
    const int shift = std::max(0, missing);
    for (const auto& m : trace.meals.events) {
        obs.meals.push_back({slot_of(m.minute) + shift, static_cast<int>(m.category)});
    }
    for (const auto& d : prior_doses) {
        if (d.minute < 0.0) {
            obs.doses.push_back({slot_of(d.minute) + shift, static_cast<int>(d.category)});
        }
    }
    for (const auto& d : trace.doses) {
        obs.doses.push_back({slot_of(d.minute) + shift, static_cast<int>(d.category)});
    }
    return obs;
}

Mat action_to_time_series(const Action& action) {
    Mat out(kActionChannels, kObsLength);
    for (int s = 0; s < kObsLength; ++s) {
        const int w = therapy::time_window(s * kSlotMinutes);
        const double da = action[static_cast<std::size_t>(sim::kNumCategories + w)];
        for (int c = 0; c < kActionChannels; ++c) {
            const double db = action[static_cast<std::size_t>(c)];
            out(c, s) = db + da + db * da;
        }
    }
    return out;
}

Mat pack_observations(std::span<const Observation* const> obs) {
    const int batch = static_cast<int>(obs.size());
    Mat packed(kObsChannels, static_cast<Eigen::Index>(kObsLength) * batch);
    for (int b = 0; b < batch; ++b) {
        obs[static_cast<std::size_t>(b)]->write_channels(packed, b, batch);
    }
    return packed;
}

Mat pack_critic_input(std::span<const Observation* const> obs, const Mat& actions) {
    const int batch = static_cast<int>(obs.size());
    if (actions.rows() != therapy::kActionDim || actions.cols() != batch) {
        throw std::invalid_argument("pack_critic_input: actions must be 10 x batch");
    }
    Mat packed(kCriticChannels, static_cast<Eigen::Index>(kObsLength) * batch);
    Mat obs_part(kObsChannels, packed.cols());
    for (int b = 0; b < batch; ++b) {
        obs[static_cast<std::size_t>(b)]->write_channels(obs_part, b, batch);
    }
    packed.topRows(kObsChannels) = obs_part;
    for (int s = 0; s < kObsLength; ++s) {
        const int w = therapy::time_window(s * kSlotMinutes);
        for (int b = 0; b < batch; ++b) {
            const double da = actions(sim::kNumCategories + w, b);
            for (int c = 0; c < kActionChannels; ++c) {
                const double db = actions(c, b);
                packed(kObsChannels + c, static_cast<Eigen::Index>(s) * batch + b) = db + da + db * da;
            }
        }
    }
    return packed;
}

}    // namespace qmrl::sac
