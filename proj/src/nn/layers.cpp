#include "qmrl/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace qmrl::nn {

Mat sigmoid(const Mat& x) {
    return (1.0 + (-x.array()).exp()).inverse().matrix();
}

Mat fast_tanh(const Mat& x) {
    return (2.0 * (1.0 + (-2.0 * x.array()).exp()).inverse() - 1.0).matrix();
}

void uniform_init(Mat& m, double scale, Rng& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = rng.uniform(-scale, scale);
        }
    }
}

// ---------------------------------------------------------------------------

Dense::Dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng, double init_gain)
    : in_(in), out_(out) {
    w_ = store.add(name + ".weight", out, in);
    b_ = store.add(name + ".bias", out, 1);
    const double scale = init_gain * std::sqrt(6.0 / static_cast<double>(in + out));
    uniform_init(store[w_].value, scale, rng);
}

Mat Dense::forward(const ParamStore& store, const Mat& x, bool cache) {
    if (x.rows() != in_) {
        throw std::invalid_argument("Dense::forward: input has wrong row count");
    }
    if (cache) {
        x_ = x;
    }
    Mat y = store[w_].value * x;
    y.colwise() += store[b_].value.col(0);
    return y;
}

Mat Dense::backward(ParamStore& store, const Mat& dy) const {
    store[w_].grad.noalias() += dy * x_.transpose();
    store[b_].grad.col(0) += dy.rowwise().sum();
    return store[w_].value.transpose() * dy;
}

// ---------------------------------------------------------------------------

Mat Relu::forward(const Mat& x, bool cache) {
    Mat y = x.cwiseMax(0.0);
    if (cache) {
        mask_ = (x.array() > 0.0).cast<double>().matrix();
    }
    return y;
}

Mat Relu::backward(const Mat& dy) const {
    return dy.cwiseProduct(mask_);
}

// ---------------------------------------------------------------------------

Dropout::Dropout(double p) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument("Dropout: rate must be in [0, 1)");
    }
}

Mat Dropout::forward(const Mat& x, bool training, Rng& rng) {
    active_ = training && p_ > 0.0;
    if (!active_) {
        return x;
    }
    const double keep_scale = 1.0 / (1.0 - p_);
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            mask_(i, j) = rng.uniform() < p_ ? 0.0 : keep_scale;
        }
    }
    return x.cwiseProduct(mask_);
}

Mat Dropout::backward(const Mat& dy) const {
    return active_ ? Mat(dy.cwiseProduct(mask_)) : dy;
}

// ---------------------------------------------------------------------------

Lstm::Lstm(ParamStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng)
    : input_(input_size), hidden_(hidden_size) {
    wx_ = store.add(name + ".weight_ih", 4 * hidden_size, input_size);
    wh_ = store.add(name + ".weight_hh", 4 * hidden_size, hidden_size);
    b_ = store.add(name + ".bias", 4 * hidden_size, 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    uniform_init(store[wx_].value, scale, rng);
    uniform_init(store[wh_].value, scale, rng);
    store[b_].value.block(hidden_size, 0, hidden_size, 1).setConstant(1.0);    // forget gate
}

Mat Lstm::forward(const ParamStore& store, const Mat& x, int steps, bool cache) {
    if (x.rows() != input_ || steps <= 0 || x.cols() % steps != 0) {
        throw std::invalid_argument("Lstm::forward: input shape mismatch");
    }
    const int H = hidden_;
    const Eigen::Index B = x.cols() / steps;
    const Mat& wh = store[wh_].value;

    Mat pre = store[wx_].value * x;
    pre.colwise() += store[b_].value.col(0);

    Mat h = Mat::Zero(H, B);
    Mat c = Mat::Zero(H, B);
    if (cache) {
        steps_ = steps;
        batch_ = static_cast<int>(B);
        x_ = x;
        gates_.resize(4 * H, steps * B);
        cells_.resize(H, (steps + 1) * B);
        hiddens_.resize(H, (steps + 1) * B);
        tanh_c_.resize(H, steps * B);
        cells_.leftCols(B).setZero();
        hiddens_.leftCols(B).setZero();
    }

    Mat g(4 * H, B);
    for (int t = 0; t < steps; ++t) {
        g.noalias() = pre.middleCols(t * B, B);
        g.noalias() += wh * h;
        // i, f, o through the logistic; the cell candidate through tanh.
        g.topRows(2 * H) = sigmoid(g.topRows(2 * H));
        g.middleRows(2 * H, H) = fast_tanh(g.middleRows(2 * H, H));
        g.bottomRows(H) = sigmoid(g.bottomRows(H));
        c = g.middleRows(H, H).cwiseProduct(c) + g.topRows(H).cwiseProduct(g.middleRows(2 * H, H));
        Mat tc = fast_tanh(c);
        h = g.bottomRows(H).cwiseProduct(tc);
        if (cache) {
            gates_.middleCols(t * B, B) = g;
            cells_.middleCols((t + 1) * B, B) = c;
            hiddens_.middleCols((t + 1) * B, B) = h;
            tanh_c_.middleCols(t * B, B) = tc;
        }
    }
    return h;
}

Mat Lstm::outputs() const {
    return hiddens_.rightCols(static_cast<Eigen::Index>(steps_) * batch_);
}

Mat Lstm::backward(ParamStore& store, const Mat& d_last, const Mat* d_all, bool want_dx) const {
    const int H = hidden_;
    const Eigen::Index B = batch_;
    const int T = steps_;
    if (T == 0 || d_last.rows() != H || d_last.cols() != B) {
        throw std::invalid_argument("Lstm::backward: no cached forward pass or shape mismatch");
    }
    const Mat& wh = store[wh_].value;

    Mat d_gates(4 * H, T * B);
    Mat dh = d_last;
    Mat dc = Mat::Zero(H, B);
    for (int t = T - 1; t >= 0; --t) {
        if (d_all != nullptr) {
            dh += d_all->middleCols(t * B, B);
        }
        const auto gt = gates_.middleCols(t * B, B);
        const auto i = gt.topRows(H).array();
        const auto f = gt.middleRows(H, H).array();
        const auto gg = gt.middleRows(2 * H, H).array();
        const auto o = gt.bottomRows(H).array();
        const auto tc = tanh_c_.middleCols(t * B, B).array();
        const auto c_prev = cells_.middleCols(t * B, B).array();

        dc.array() += dh.array() * o * (1.0 - tc.square());
        auto dg = d_gates.middleCols(t * B, B);
        dg.topRows(H) = (dc.array() * gg * i * (1.0 - i)).matrix();
        dg.middleRows(H, H) = (dc.array() * c_prev * f * (1.0 - f)).matrix();
        dg.middleRows(2 * H, H) = (dc.array() * i * (1.0 - gg.square())).matrix();
        dg.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
        dc.array() *= f;
        dh.noalias() = wh.transpose() * dg;
    }

    store[wh_].grad.noalias() += d_gates * hiddens_.leftCols(T * B).transpose();
    store[wx_].grad.noalias() += d_gates * x_.transpose();
    store[b_].grad.col(0) += d_gates.rowwise().sum();
    if (!want_dx) {
        return {};
    }
    return store[wx_].value.transpose() * d_gates;
}

}    // namespace qmrl::nn
