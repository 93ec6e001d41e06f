#pragma once

#include <cstdint>

#include "qmrl/nn/layers.hpp"
#include "qmrl/sac/encoding.hpp"

namespace qmrl::sac {

struct NetworkConfig {
    int hidden = 64;       // LSTM units
    int dense = 128;       // width of both dense layers
    double dropout = 0.1;
};

/// LSTM encoder -> dense -> ReLU -> dropout -> dense -> ReLU -> dropout -> heads.
/// Shared trunk of the actor and the critics.
class Trunk {
  public:
    Trunk() = default;
    Trunk(nn::ParamStore& store, int channels, const NetworkConfig& cfg, Rng& rng);

    /// x is packed (channels x T*B). Returns the last dense activation (F x B).
    Mat forward(const nn::ParamStore& store, const Mat& x, int steps, bool training, Rng& rng, bool cache);
    /// Returns d loss / d x when want_dx is set.
    Mat backward(nn::ParamStore& store, const Mat& d_features, bool want_dx);

  private:
    nn::Lstm lstm_;
    nn::Dense fc1_;
    nn::Dense fc2_;
    nn::Relu relu1_;
    nn::Relu relu2_;
    nn::Dropout drop1_;
    nn::Dropout drop2_;
};

/// Gaussian policy over the 10 policy deltas. Produces mu and a log-std
/// softly confined to [kLogStdMin, kLogStdMax].
class Actor {
  public:
    Actor() = default;
    Actor(const NetworkConfig& cfg, std::uint64_t seed);

    struct Output {
        Mat mu;
        Mat log_std;
    };

    Output forward(const Mat& x, bool training, Rng& rng, bool cache = true);
    void backward(const Mat& d_mu, const Mat& d_log_std);

    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }
    const NetworkConfig& config() const { return cfg_; }

  private:
    NetworkConfig cfg_;
    nn::ParamStore store_;
    Trunk trunk_;
    nn::Dense mu_head_;
    nn::Dense log_std_head_;
    Mat log_std_;
};

/// Soft Q-function over (observation, action time series).
class Critic {
  public:
    Critic() = default;
    Critic(const NetworkConfig& cfg, std::uint64_t seed);

    /// x packed with kCriticChannels rows. Returns 1 x B.
    Mat forward(const Mat& x, bool training, Rng& rng, bool cache = true);
    /// Accumulates parameter gradients; returns d loss / d x when want_dx is set.
    Mat backward(const Mat& d_q, bool want_dx = false);

    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }
    const NetworkConfig& config() const { return cfg_; }

  private:
    NetworkConfig cfg_;
    nn::ParamStore store_;
    Trunk trunk_;
    nn::Dense head_;
};

/// Chain rule from gradients on the packed action channels of a critic input
/// to gradients on the 10 raw action entries (10 x B).
Mat action_grad_from_input(const Mat& d_input, const Mat& actions);

}    // namespace qmrl::sac
