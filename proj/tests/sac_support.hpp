#pragma once

// Fixtures and scalar references for the agent tests.

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "qmrl/sac/agent.hpp"
#include "qmrl/sac/encoding.hpp"
#include "support.hpp"

namespace qmrl::testing {

using sac::Batch;
using sac::Observation;
using sac::SacConfig;
using sac::kCriticChannels;
using sac::kObsChannels;
using sac::kObsLength;
using Mat = Eigen::MatrixXd;

inline SacConfig tiny(double dropout = 0.1) {
    SacConfig c;
    c.network = sac::NetworkConfig{2, 3, dropout};
    return c;
}

inline Observation synthetic_obs(std::uint64_t seed) {
    Rng rng(seed);
    Observation o;
    o.cgm.resize(kObsLength);
    for (auto& v : o.cgm) v = static_cast<float>(rng.uniform(-0.6, 0.6));
    for (int d = 0; d < 14; ++d) {
        const int slot = d * 48 + 15 + rng.uniform_int(0, 4);
        const int cat = rng.uniform_int(0, 3);
        o.meals.push_back({slot, cat});
        o.doses.push_back({slot, cat});
    }
    o.doses.push_back({-3, 1});
    return o;
}

/// Owns a set of observations and exposes them as the pointer span the API takes.
struct ObsSet {
    std::vector<std::shared_ptr<const Observation>> owned;
    std::vector<const Observation*> ptrs;
    explicit ObsSet(int n, std::uint64_t seed = 100) {
        for (int i = 0; i < n; ++i) {
            owned.push_back(std::make_shared<Observation>(synthetic_obs(seed + static_cast<std::uint64_t>(i))));
            ptrs.push_back(owned.back().get());
        }
    }
};

inline Batch make_batch(const ObsSet& s, const ObsSet& next, std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(s.ptrs.size());
    Batch b;
    b.states = s.ptrs;
    b.next_states = next.ptrs;
    b.actions.resize(therapy::kActionDim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int i = 0; i < therapy::kActionDim; ++i) b.actions(i, j) = rng.uniform(-1, 1);
    }
    b.rewards.resize(1, n);
    for (Eigen::Index j = 0; j < n; ++j) b.rewards(0, j) = rng.uniform(-2, 0.4);
    b.dones = Mat::Zero(1, n);
    b.weights = Mat::Ones(1, n);
    return b;
}

inline int hand_window(int slot) {
    const double hour = slot * 0.5;
    return static_cast<int>(std::floor(std::fmod(hour - 3.0 + 24.0, 24.0) / 4.0));
}

inline const Mat& param(const nn::ParamStore& s, const char* name) { return s.find(name)->value; }

inline std::vector<double> scalar_trunk(const nn::ParamStore& s, const Mat& seq) {
    const auto hs = scalar_lstm(param(s, "lstm.weight_ih"), param(s, "lstm.weight_hh"), param(s, "lstm.bias"), seq);
    auto relu = [](std::vector<double> v) {
        for (auto& x : v) x = std::max(x, 0.0);
        return v;
    };
    auto f = relu(scalar_dense(param(s, "fc1.weight"), param(s, "fc1.bias"), hs.back()));
    return relu(scalar_dense(param(s, "fc2.weight"), param(s, "fc2.bias"), f));
}

/// Critic input assembled slot by slot from the dense observation.
inline Mat hand_critic_seq(const Observation& o, const std::vector<double>& a) {
    Mat seq(kCriticChannels, kObsLength);
    seq.topRows(kObsChannels) = o.dense();
    for (int t = 0; t < kObsLength; ++t) {
        const double da = a[static_cast<std::size_t>(4 + hand_window(t))];
        for (int c = 0; c < 4; ++c) seq(kObsChannels + c, t) = a[static_cast<std::size_t>(c)] + da + a[static_cast<std::size_t>(c)] * da;
    }
    return seq;
}

}    // namespace qmrl::testing
