#pragma once

#include <span>
#include <vector>

#include "qmrl/nn/params.hpp"
#include "qmrl/sim/simulate.hpp"
#include "qmrl/therapy.hpp"

namespace qmrl::sac {

using nn::Mat;
using therapy::Action;

inline constexpr int kObsLength = sim::kObservationLength;               // 672 half-hour slots
inline constexpr int kObsChannels = 1 + 2 * sim::kNumCategories;         // cgm, 4 meal, 4 insulin
inline constexpr int kActionChannels = sim::kNumCategories;              // one per category
inline constexpr int kCriticChannels = kObsChannels + kActionChannels;

/// Log-scale map of [40, 400] mg/dL onto [-1, 1]; inputs are clamped first.
double normalize_cgm(double glucose);
double denormalize_cgm(double value);

/// A 14-day observation held compactly: the normalised CGM series plus the
/// half-hour slots of meals and boluses per category. Dense channels are
/// produced on demand by `write_channels`.
struct Observation {
    struct Event {
        int slot = 0;    // may be negative for doses carried over from the previous period
        int category = 0;
    };
    std::vector<float> cgm;    // kObsLength normalised values
    std::vector<Event> meals;
    std::vector<Event> doses;

    /// Dense kObsChannels x kObsLength array.
    Mat dense() const;
    /// Writes the channels of this observation as batch element `b` of a
    /// packed (channels x T*B) sequence matrix.
    void write_channels(Mat& packed, int b, int batch) const;
};

/// Builds the observation of a finished period. `prior_doses` are the doses
/// from earlier periods still active at its start (times relative to it).
Observation encode_state(const sim::SimTrace& trace, std::span<const therapy::DoseRecord> prior_doses = {});

/// Per-category relative dose change at every slot:
/// db_c + da_w(s) + db_c * da_w(s), shape kActionChannels x kObsLength.
Mat action_to_time_series(const Action& action);

/// Packs a batch of observations (and, for the critic, actions) into the
/// (channels x T*B) layout consumed by the LSTM.
Mat pack_observations(std::span<const Observation* const> obs);
Mat pack_critic_input(std::span<const Observation* const> obs, const Mat& actions);

}    // namespace qmrl::sac
