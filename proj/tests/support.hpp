#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls into the code paths being checked beyond the model's
// single-step integrator.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "qmrl/sim/model.hpp"
#include "qmrl/sim/patient.hpp"

namespace qmrl::testing {

/// Reward written out branch by branch from the threshold definitions.
inline double hand_reward(double t54, double t70, double tir, double t180, double t250) {
    double hypo = 0.0;
    if (t54 / 1.0 - 1.0 > 0.0) hypo += t54 / 1.0 - 1.0;
    if (t70 / 4.0 - 1.0 > 0.0) hypo += t70 / 4.0 - 1.0;
    double hyper = 0.0;
    if (t180 / 25.0 - 1.0 > 0.0) hyper += t180 / 25.0 - 1.0;
    if (t250 / 5.0 - 1.0 > 0.0) hyper += t250 / 5.0 - 1.0;
    const double neg = hypo + hyper;
    if (neg > 0.0) return -neg;
    const double pos = tir / 71.0 - 1.0;
    return pos > 0.0 ? pos : 0.0;
}

struct Impulse {
    double minute;
    double amount;
};

/// Glucose at every whole minute of a run driven only by step_ode with a
/// fixed sub-step. Impulses are delivered at the start of their minute.
inline std::vector<double> manual_run(const sim::VirtualPatient& p, int minutes, double dt,
                                      const std::vector<Impulse>& meals, const std::vector<Impulse>& boluses) {
    sim::PatientState s = sim::equilibrium_state(p);
    const int sub = static_cast<int>(std::lround(1.0 / dt));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(minutes) + 1);
    out.push_back(s.plasma_glucose);
    for (int t = 0; t < minutes; ++t) {
        for (int k = 0; k < sub; ++k) {
            sim::OdeInputs in;
            in.basal = p.basal_rate;
            if (k == 0) {
                for (const auto& m : meals) {
                    if (static_cast<int>(m.minute) == t) in.carbs += m.amount;
                }
                for (const auto& b : boluses) {
                    if (static_cast<int>(b.minute) == t) in.bolus += b.amount;
                }
            }
            s = sim::step_ode(p, s, in, dt);
        }
        out.push_back(s.plasma_glucose);
    }
    return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

/// Least-squares slope of log(error) against log(dt) for dt = 1, 1/2, 1/4
/// against a dt = 1/16 reference over 24 h with a meal and a bolus.
inline double rk4_observed_order(const sim::VirtualPatient& p) {
    const std::vector<Impulse> meals{{60, 70.0}, {480, 40.0}};
    const std::vector<Impulse> boluses{{60, 4.0}, {480, 2.5}};
    const int minutes = 1440;
    const auto ref = manual_run(p, minutes, 0.0625, meals, boluses);
    const double dts[] = {1.0, 0.5, 0.25};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double dt : dts) {
        const double e = max_abs_diff(manual_run(p, minutes, dt, meals, boluses), ref);
        const double x = std::log(dt);
        const double y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = 3.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Largest |G - basal_glucose| over a basal-only, meal-free run.
inline double equilibrium_deviation(const sim::VirtualPatient& p, int minutes) {
    const auto g = manual_run(p, minutes, 1.0, {}, {});
    double m = 0.0;
    for (double v : g) m = std::max(m, std::abs(v - p.basal_glucose));
    return m;
}

/// True when adding one unit to the bolus never raises any later sample.
inline bool insulin_response_monotone(const sim::VirtualPatient& p, double meal_minute, double carbs,
                                      double bolus) {
    const int minutes = 720;
    const auto base = manual_run(p, minutes, 1.0, {{meal_minute, carbs}}, {{meal_minute, bolus}});
    const auto more = manual_run(p, minutes, 1.0, {{meal_minute, carbs}}, {{meal_minute, bolus + 1.0}});
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (more[i] > base[i] + 1e-12) return false;
    }
    return true;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Scalar LSTM over one sequence (columns are time steps), written from the
/// gate equations with gate order i, f, g, o. Returns every hidden state.
inline std::vector<std::vector<double>> scalar_lstm(const Eigen::MatrixXd& wx, const Eigen::MatrixXd& wh,
                                                    const Eigen::MatrixXd& b, const Eigen::MatrixXd& seq) {
    const auto H = static_cast<std::size_t>(wh.cols());
    std::vector<double> h(H, 0.0);
    std::vector<double> c(H, 0.0);
    std::vector<double> z(4 * H);
    std::vector<std::vector<double>> out;
    for (Eigen::Index t = 0; t < seq.cols(); ++t) {
        for (std::size_t r = 0; r < 4 * H; ++r) {
            const auto ri = static_cast<Eigen::Index>(r);
            double s = b(ri, 0);
            for (Eigen::Index k = 0; k < seq.rows(); ++k) s += wx(ri, k) * seq(k, t);
            for (std::size_t k = 0; k < H; ++k) s += wh(ri, static_cast<Eigen::Index>(k)) * h[k];
            z[r] = s;
        }
        for (std::size_t k = 0; k < H; ++k) {
            const double i = logistic(z[k]);
            const double f = logistic(z[H + k]);
            const double g = std::tanh(z[2 * H + k]);
            const double o = logistic(z[3 * H + k]);
            c[k] = f * c[k] + i * g;
            h[k] = o * std::tanh(c[k]);
        }
        out.push_back(h);
    }
    return out;
}

/// y = W x + b on a plain vector.
inline std::vector<double> scalar_dense(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double s = b(r, 0);
        for (Eigen::Index k = 0; k < w.cols(); ++k) s += w(r, k) * x[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(r)] = s;
    }
    return y;
}

}    // namespace qmrl::testing
