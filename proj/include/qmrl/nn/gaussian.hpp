#pragma once

#include "qmrl/nn/params.hpp"

namespace qmrl::nn {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Maps an unbounded head output onto [kLogStdMin, kLogStdMax] smoothly.
Mat squash_log_std(const Mat& raw);
/// d log_std / d raw, element-wise, given the squashed value.
Mat squash_log_std_grad(const Mat& log_std);

/// Reparameterised sample a = a_max * tanh(mu + sigma * eps) for a batch
/// (rows are action dimensions, columns batch elements).
struct SquashedSample {
    Mat eps;
    Mat pre_tanh;     // u = mu + sigma * eps
    Mat squashed;     // tanh(u)
    Mat action;       // a_max * tanh(u)
    Mat log_prob;     // 1 x B, summed over action dimensions
    Mat std;
    double a_max = 1.0;
};

SquashedSample squashed_sample(const Mat& mu, const Mat& log_std, const Mat& eps, double a_max = 1.0);

/// Backpropagates d loss / d action and d loss / d log_prob to mu and log_std.
void squashed_backward(const SquashedSample& s, const Mat& d_action, const Mat& d_log_prob, Mat& d_mu,
                       Mat& d_log_std);

/// log(1 - tanh(u)^2) in a form that stays finite for large |u|.
double log1m_tanh_sq(double u);

/// Density of a single squashed coordinate at `action`, for quadrature checks.
double squashed_log_density(double action, double mu, double log_std, double a_max = 1.0);

}    // namespace qmrl::nn
