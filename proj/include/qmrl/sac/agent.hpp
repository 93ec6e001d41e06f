#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qmrl/nn/gaussian.hpp"
#include "qmrl/nn/params.hpp"
#include "qmrl/replay.hpp"
#include "qmrl/sac/networks.hpp"

namespace qmrl::sac {

struct SacConfig {
    NetworkConfig network;
    double gamma = 0.95;
    double tau = 0.005;                  // target smoothing coefficient
    double target_entropy = -10.0;       // -dim(A)
    double critic_lr = 4e-4;
    double actor_lr = 2e-4;
    double alpha_lr = 4e-4;
    double initial_alpha = 0.1;
    double reward_scale = 1.0;           // multiplies rewards in the critic target only
    double grad_clip = 10.0;             // global norm per network; <= 0 disables
};

/// Minibatch view used by the updates. Actions are 10 x B in [-1, 1].
struct Batch {
    std::vector<const Observation*> states;
    std::vector<const Observation*> next_states;
    Mat actions;
    Mat rewards;    // 1 x B
    Mat dones;      // 1 x B, 1 for terminal
    Mat weights;    // 1 x B importance weights

    static Batch from_sample(const replay::SampledBatch& s);
};

struct CriticStats {
    double loss1 = 0.0;
    double loss2 = 0.0;
    std::vector<double> td_errors;    // mean of |Q1 - y| and |Q2 - y| per element
};

struct ActorStats {
    double loss = 0.0;
    double mean_log_prob = 0.0;
    Mat log_prob;    // 1 x B, detached
};

/// Value and action-gradient of the critic seen by the actor: given packed
/// observations and actions (10 x B) returns q (1 x B) and dq/da (10 x B).
using CriticProbe = std::function<void(std::span<const Observation* const>, const Mat& actions, Mat& q, Mat& dq_da)>;

class SacAgent {
  public:
    SacAgent(const SacConfig& cfg, std::uint64_t seed);

    /// y = s r + gamma (1 - done) (min_i Qtarg_i(s', a') - alpha log pi(a'|s')), a' ~ pi(.|s').
    Mat critic_target(const Batch& batch);

    /// One Adam step on each critic towards y with importance-weighted MSE.
    CriticStats update_critics(const Batch& batch, const Mat& y);

    /// One Adam step on the actor ascending min-Q minus the entropy cost.
    /// `probe` defaults to the twin critics; tests may substitute their own.
    ActorStats update_actor(std::span<const Observation* const> states, const CriticProbe& probe = {});

    /// One Adam step on log alpha for L = -alpha (log pi + H). Returns dL/dlog alpha.
    double update_temperature(const Mat& log_prob);

    /// target <- (1 - tau) target + tau critic for both pairs.
    void polyak_update();

    /// Full iteration of Algorithm 1 on a sampled batch. Returns per-element
    /// TD errors for the priority update. Throws std::runtime_error if a loss
    /// becomes non-finite.
    CriticStats train_step(const Batch& batch);

    /// Policy action for one observation: tanh(mu) when deterministic, a
    /// squashed sample otherwise.
    therapy::Action act(const Observation& obs, bool deterministic);
    std::vector<therapy::Action> act_batch(std::span<const Observation* const> obs, bool deterministic);

    /// Twin-critic probe used by update_actor.
    void twin_critic_probe(std::span<const Observation* const> states, const Mat& actions, Mat& q, Mat& dq_da);

    double alpha() const;
    double log_alpha() const;
    void set_log_alpha(double v);

    Actor& actor() { return actor_; }
    Critic& critic(int i) { return i == 0 ? q1_ : q2_; }
    Critic& target(int i) { return i == 0 ? q1_targ_ : q2_targ_; }
    const SacConfig& config() const { return cfg_; }
    Rng& rng() { return rng_; }
    nn::ParamStore& temperature_params() { return alpha_store_; }

    long iterations() const { return iterations_; }

    /// Gaussian noise for a batch of actions; exposed for deterministic tests.
    Mat draw_noise(Eigen::Index batch);

  private:
    SacConfig cfg_;
    Actor actor_;
    Critic q1_, q2_, q1_targ_, q2_targ_;
    nn::ParamStore alpha_store_;
    Rng rng_;
    long iterations_ = 0;
};

}    // namespace qmrl::sac
