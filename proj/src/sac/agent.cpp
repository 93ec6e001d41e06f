#include "qmrl/sac/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace qmrl::sac {

namespace {

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw std::runtime_error(std::string("divergence: non-finite ") + what);
    }
}

void clipped_adam(nn::ParamStore& store, double lr, double clip) {
    if (clip > 0.0) {
        store.clip_grad_norm(clip);
    }
    nn::AdamConfig cfg;
    cfg.lr = lr;
    nn::adam_step(store, cfg);
}

}    // namespace

Batch Batch::from_sample(const replay::SampledBatch& s) {
    const auto n = static_cast<Eigen::Index>(s.items.size());
    Batch b;
    b.actions.resize(therapy::kActionDim, n);
    b.rewards.resize(1, n);
    b.dones.resize(1, n);
    b.weights.resize(1, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& t = *s.items[static_cast<std::size_t>(k)];
        b.states.push_back(t.state.get());
        b.next_states.push_back(t.next_state.get());
        for (int i = 0; i < therapy::kActionDim; ++i) {
            b.actions(i, k) = t.action[static_cast<std::size_t>(i)];
        }
        b.rewards(0, k) = t.reward;
        b.dones(0, k) = t.done ? 1.0 : 0.0;
        b.weights(0, k) = s.weights[static_cast<std::size_t>(k)];
    }
    return b;
}

SacAgent::SacAgent(const SacConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      actor_(cfg.network, derive_seed(seed, {1})),
      q1_(cfg.network, derive_seed(seed, {2})),
      q2_(cfg.network, derive_seed(seed, {3})),
      rng_(derive_seed(seed, {4})) {
    q1_targ_ = q1_;
    q2_targ_ = q2_;
    alpha_store_.add("log_alpha", 1, 1);
    alpha_store_[0].value(0, 0) = std::log(cfg.initial_alpha);
}

double SacAgent::alpha() const { return std::exp(log_alpha()); }
double SacAgent::log_alpha() const { return alpha_store_[0].value(0, 0); }
void SacAgent::set_log_alpha(double v) { alpha_store_[0].value(0, 0) = v; }

Mat SacAgent::draw_noise(Eigen::Index batch) {
    Mat eps(therapy::kActionDim, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int i = 0; i < therapy::kActionDim; ++i) {
            eps(i, b) = rng_.normal();
        }
    }
    return eps;
}

Mat SacAgent::critic_target(const Batch& batch) {
    const auto n = static_cast<Eigen::Index>(batch.next_states.size());
    const Mat x = pack_observations(batch.next_states);
    const auto out = actor_.forward(x, false, rng_, false);
    const auto s = nn::squashed_sample(out.mu, out.log_std, draw_noise(n));
    const Mat xc = pack_critic_input(batch.next_states, s.action);
    const Mat q1 = q1_targ_.forward(xc, false, rng_, false);
    const Mat q2 = q2_targ_.forward(xc, false, rng_, false);
    const double a = alpha();
    Mat y(1, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        const double soft_v = std::min(q1(0, b), q2(0, b)) - a * s.log_prob(0, b);
        y(0, b) = cfg_.reward_scale * batch.rewards(0, b) + cfg_.gamma * (1.0 - batch.dones(0, b)) * soft_v;
    }
    return y;
}

CriticStats SacAgent::update_critics(const Batch& batch, const Mat& y) {
    const auto n = static_cast<Eigen::Index>(batch.states.size());
    const Mat xc = pack_critic_input(batch.states, batch.actions);
    CriticStats stats;
    stats.td_errors.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < 2; ++i) {
        Critic& q = critic(i);
        q.params().zero_grad();
        const Mat pred = q.forward(xc, true, rng_, true);
        const Mat diff = pred - y;
        const double loss = diff.cwiseAbs2().cwiseProduct(batch.weights).sum() / static_cast<double>(n);
        check_finite(loss, "critic loss");
        (i == 0 ? stats.loss1 : stats.loss2) = loss;
        for (Eigen::Index b = 0; b < n; ++b) {
            stats.td_errors[static_cast<std::size_t>(b)] += 0.5 * std::abs(diff(0, b));
        }
        q.backward(2.0 * diff.cwiseProduct(batch.weights) / static_cast<double>(n));
        clipped_adam(q.params(), cfg_.critic_lr, cfg_.grad_clip);
    }
    return stats;
}

void SacAgent::twin_critic_probe(std::span<const Observation* const> states, const Mat& actions, Mat& q,
                                 Mat& dq_da) {
    const auto n = actions.cols();
    const Mat xc = pack_critic_input(states, actions);
    const Mat q1 = q1_.forward(xc, false, rng_, true);
    const Mat q2 = q2_.forward(xc, false, rng_, true);
    q = q1.cwiseMin(q2);
    Mat pick1 = Mat::Zero(1, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        pick1(0, b) = q1(0, b) <= q2(0, b) ? 1.0 : 0.0;
    }
    const Mat pick2 = Mat::Ones(1, n) - pick1;
    // Parameter gradients accumulated here are discarded by the next critic update.
    Mat dx = q1_.backward(pick1, true);
    dx += q2_.backward(pick2, true);
    dq_da = action_grad_from_input(dx, actions);
}

ActorStats SacAgent::update_actor(std::span<const Observation* const> states, const CriticProbe& probe) {
    const auto n = static_cast<Eigen::Index>(states.size());
    actor_.params().zero_grad();
    const Mat x = pack_observations(states);
    const auto out = actor_.forward(x, true, rng_, true);
    const auto s = nn::squashed_sample(out.mu, out.log_std, draw_noise(n));

    Mat q, dq_da;
    if (probe) {
        probe(states, s.action, q, dq_da);
    } else {
        twin_critic_probe(states, s.action, q, dq_da);
    }

    const double a = alpha();
    ActorStats stats;
    stats.loss = (a * s.log_prob - q).sum() / static_cast<double>(n);
    check_finite(stats.loss, "actor loss");
    stats.mean_log_prob = s.log_prob.mean();
    stats.log_prob = s.log_prob;

    const Mat d_action = -dq_da / static_cast<double>(n);
    const Mat d_log_prob = Mat::Constant(1, n, a / static_cast<double>(n));
    Mat d_mu, d_log_std;
    nn::squashed_backward(s, d_action, d_log_prob, d_mu, d_log_std);
    actor_.backward(d_mu, d_log_std);
    clipped_adam(actor_.params(), cfg_.actor_lr, cfg_.grad_clip);
    return stats;
}

double SacAgent::update_temperature(const Mat& log_prob) {
    const double grad = -alpha() * (log_prob.array() + cfg_.target_entropy).mean();
    check_finite(grad, "temperature gradient");
    alpha_store_[0].grad(0, 0) = grad;
    nn::AdamConfig adam;
    adam.lr = cfg_.alpha_lr;
    nn::adam_step(alpha_store_, adam);
    return grad;
}

void SacAgent::polyak_update() {
    nn::soft_update(q1_targ_.params(), q1_.params(), cfg_.tau);
    nn::soft_update(q2_targ_.params(), q2_.params(), cfg_.tau);
}

CriticStats SacAgent::train_step(const Batch& batch) {
    const Mat y = critic_target(batch);
    auto stats = update_critics(batch, y);
    const auto actor_stats = update_actor(batch.states);
    update_temperature(actor_stats.log_prob);
    polyak_update();
    ++iterations_;
    return stats;
}

std::vector<therapy::Action> SacAgent::act_batch(std::span<const Observation* const> obs, bool deterministic) {
    const auto n = static_cast<Eigen::Index>(obs.size());
    const Mat x = pack_observations(obs);
    const auto out = actor_.forward(x, false, rng_, false);
    Mat a;
    if (deterministic) {
        a = out.mu.array().tanh().matrix();
    } else {
        a = nn::squashed_sample(out.mu, out.log_std, draw_noise(n)).action;
    }
    std::vector<therapy::Action> actions(static_cast<std::size_t>(n));
    for (Eigen::Index b = 0; b < n; ++b) {
        for (int i = 0; i < therapy::kActionDim; ++i) {
            actions[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] = a(i, b);
        }
    }
    return actions;
}

therapy::Action SacAgent::act(const Observation& obs, bool deterministic) {
    const Observation* p = &obs;
    return act_batch(std::span<const Observation* const>(&p, 1), deterministic).front();
}

}    // namespace qmrl::sac
