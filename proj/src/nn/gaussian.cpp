#include "qmrl/nn/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmrl/nn/layers.hpp"

namespace qmrl::nn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}    // namespace

Mat squash_log_std(const Mat& raw) {
    const double half_span = 0.5 * (kLogStdMax - kLogStdMin);
    return (kLogStdMin + half_span * (fast_tanh(raw).array() + 1.0)).matrix();
}

Mat squash_log_std_grad(const Mat& log_std) {
    const double half_span = 0.5 * (kLogStdMax - kLogStdMin);
    const auto t = (log_std.array() - kLogStdMin) / half_span - 1.0;
    return (half_span * (1.0 - t.square())).matrix();
}

double log1m_tanh_sq(double u) {
    return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

SquashedSample squashed_sample(const Mat& mu, const Mat& log_std, const Mat& eps, double a_max) {
    if (mu.rows() != log_std.rows() || mu.cols() != log_std.cols() || mu.rows() != eps.rows() ||
        mu.cols() != eps.cols()) {
        throw std::invalid_argument("squashed_sample: shape mismatch");
    }
    SquashedSample s;
    s.a_max = a_max;
    s.eps = eps;
    s.std = log_std.array().exp().matrix();
    s.pre_tanh = mu + s.std.cwiseProduct(eps);
    s.squashed = s.pre_tanh.array().tanh().matrix();
    s.action = a_max * s.squashed;
    s.log_prob.resize(1, mu.cols());
    const double log_amax = std::log(a_max);
    for (Eigen::Index b = 0; b < mu.cols(); ++b) {
        double lp = 0.0;
        for (Eigen::Index i = 0; i < mu.rows(); ++i) {
            lp += -0.5 * eps(i, b) * eps(i, b) - log_std(i, b) - kHalfLog2Pi - log_amax -
                  log1m_tanh_sq(s.pre_tanh(i, b));
        }
        s.log_prob(0, b) = lp;
    }
    return s;
}

void squashed_backward(const SquashedSample& s, const Mat& d_action, const Mat& d_log_prob, Mat& d_mu,
                       Mat& d_log_std) {
    const auto t = s.squashed.array();
    // d/du of -log(1 - tanh(u)^2) is 2 tanh(u).
    Mat du = (d_action.array() * s.a_max * (1.0 - t.square())).matrix();
    Mat correction = 2.0 * s.squashed;
    correction.array().rowwise() *= d_log_prob.row(0).array();
    du += correction;
    d_mu = du;
    d_log_std = du.cwiseProduct(s.std).cwiseProduct(s.eps);
    d_log_std.rowwise() -= d_log_prob.row(0);
}

double squashed_log_density(double action, double mu, double log_std, double a_max) {
    const double u = std::atanh(action / a_max);
    const double z = (u - mu) / std::exp(log_std);
    return -0.5 * z * z - log_std - kHalfLog2Pi - std::log(a_max) - log1m_tanh_sq(u);
}

}    // namespace qmrl::nn
