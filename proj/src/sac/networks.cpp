#include "qmrl/sac/networks.hpp"

#include "qmrl/nn/gaussian.hpp"

namespace qmrl::sac {

namespace {

constexpr double kHeadGain = 0.1;    // small initial outputs keep the first actions near zero

}    // namespace

Trunk::Trunk(nn::ParamStore& store, int channels, const NetworkConfig& cfg, Rng& rng)
    : lstm_(store, "lstm", channels, cfg.hidden, rng),
      fc1_(store, "fc1", cfg.hidden, cfg.dense, rng),
      fc2_(store, "fc2", cfg.dense, cfg.dense, rng),
      drop1_(cfg.dropout),
      drop2_(cfg.dropout) {}

Mat Trunk::forward(const nn::ParamStore& store, const Mat& x, int steps, bool training, Rng& rng, bool cache) {
    Mat h = lstm_.forward(store, x, steps, cache);
    h = drop1_.forward(relu1_.forward(fc1_.forward(store, h, cache), cache), training, rng);
    return drop2_.forward(relu2_.forward(fc2_.forward(store, h, cache), cache), training, rng);
}

Mat Trunk::backward(nn::ParamStore& store, const Mat& d_features, bool want_dx) {
    Mat d = fc2_.backward(store, relu2_.backward(drop2_.backward(d_features)));
    d = fc1_.backward(store, relu1_.backward(drop1_.backward(d)));
    return lstm_.backward(store, d, nullptr, want_dx);
}

Actor::Actor(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    trunk_ = Trunk(store_, kObsChannels, cfg, rng);
    mu_head_ = nn::Dense(store_, "mu", cfg.dense, therapy::kActionDim, rng, kHeadGain);
    log_std_head_ = nn::Dense(store_, "log_std", cfg.dense, therapy::kActionDim, rng, kHeadGain);
}

Actor::Output Actor::forward(const Mat& x, bool training, Rng& rng, bool cache) {
    const Mat f = trunk_.forward(store_, x, kObsLength, training, rng, cache);
    Output out;
    out.mu = mu_head_.forward(store_, f, cache);
    out.log_std = nn::squash_log_std(log_std_head_.forward(store_, f, cache));
    if (cache) {
        log_std_ = out.log_std;
    }
    return out;
}

void Actor::backward(const Mat& d_mu, const Mat& d_log_std) {
    const Mat d_raw = d_log_std.cwiseProduct(nn::squash_log_std_grad(log_std_));
    Mat df = mu_head_.backward(store_, d_mu);
    df += log_std_head_.backward(store_, d_raw);
    trunk_.backward(store_, df, false);
}

Critic::Critic(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    trunk_ = Trunk(store_, kCriticChannels, cfg, rng);
    head_ = nn::Dense(store_, "q", cfg.dense, 1, rng);
}

Mat Critic::forward(const Mat& x, bool training, Rng& rng, bool cache) {
    return head_.forward(store_, trunk_.forward(store_, x, kObsLength, training, rng, cache), cache);
}

Mat Critic::backward(const Mat& d_q, bool want_dx) {
    return trunk_.backward(store_, head_.backward(store_, d_q), want_dx);
}

Mat action_grad_from_input(const Mat& d_input, const Mat& actions) {
    const Eigen::Index batch = actions.cols();
    Mat grad = Mat::Zero(therapy::kActionDim, batch);
    for (int s = 0; s < kObsLength; ++s) {
        const int w = therapy::time_window(s * sim::kObservationSampleMinutes);
        const int wi = sim::kNumCategories + w;
        for (Eigen::Index b = 0; b < batch; ++b) {
            const double da = actions(wi, b);
            for (int c = 0; c < kActionChannels; ++c) {
                const double g = d_input(kObsChannels + c, s * batch + b);
                grad(c, b) += g * (1.0 + da);
                grad(wi, b) += g * (1.0 + actions(c, b));
            }
        }
    }
    return grad;
}

}    // namespace qmrl::sac
