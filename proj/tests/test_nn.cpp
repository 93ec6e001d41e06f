#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qmrl/nn/checkpoint.hpp"
#include "qmrl/nn/gaussian.hpp"
#include "qmrl/nn/gradcheck.hpp"
#include "qmrl/nn/layers.hpp"
#include "qmrl/nn/params.hpp"
#include "qmrl/rng.hpp"
#include "support.hpp"

using namespace qmrl;
using namespace qmrl::nn;
using qmrl::testing::logistic;
using qmrl::testing::scalar_lstm;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-scale, scale);
    }
    return m;
}

}    // namespace

TEST_SUITE("activations") {
    TEST_CASE("fast tanh and sigmoid match the library functions") {
        Mat x(1, 7);
        x << -30, -3, -0.5, 0, 0.5, 3, 30;
        const Mat t = fast_tanh(x);
        const Mat s = sigmoid(x);
        for (Eigen::Index i = 0; i < x.cols(); ++i) {
            CHECK(t(0, i) == doctest::Approx(std::tanh(x(0, i))).epsilon(1e-14));
            CHECK(s(0, i) == doctest::Approx(logistic(x(0, i))).epsilon(1e-14));
        }
    }
}

TEST_SUITE("lstm") {
    TEST_CASE("zero weights and biases give zero outputs") {
        ParamStore store;
        Rng rng(1);
        Lstm l(store, "l", 3, 5, rng);
        for (auto& p : store) p.value.setZero();
        Rng xr(2);
        const Mat h = l.forward(store, random_mat(3, 4 * 2, xr), 4);
        CHECK(h.isZero(0.0));
        CHECK(l.outputs().isZero(0.0));
    }

    TEST_CASE("forget bias starts at one") {
        ParamStore store;
        Rng rng(1);
        Lstm l(store, "l", 3, 5, rng);
        const Mat& b = store[l.bias_index()].value;
        CHECK(b.middleRows(5, 5).isConstant(1.0));
        CHECK(b.topRows(5).isZero(0.0));
    }

    TEST_CASE("matches a scalar re-implementation") {
        ParamStore store;
        Rng rng(3);
        const int D = 3, H = 4, T = 5, B = 2;
        Lstm l(store, "l", D, H, rng);
        store[l.bias_index()].value = random_mat(4 * H, 1, rng);
        const Mat x = random_mat(D, T * B, rng);
        l.forward(store, x, T);
        const Mat all = l.outputs();
        for (int b = 0; b < B; ++b) {
            Mat seq(D, T);
            for (int t = 0; t < T; ++t) seq.col(t) = x.col(t * B + b);
            const auto ref = scalar_lstm(store[l.wx_index()].value, store[l.wh_index()].value,
                                         store[l.bias_index()].value, seq);
            for (int t = 0; t < T; ++t) {
                for (int k = 0; k < H; ++k) {
                    CHECK(all(k, t * B + b) == doctest::Approx(ref[t][k]).epsilon(1e-13));
                }
            }
        }
    }

    TEST_CASE("permuting the batch permutes the outputs") {
        ParamStore store;
        Rng rng(4);
        const int D = 2, H = 3, T = 6, B = 3;
        Lstm l(store, "l", D, H, rng);
        const Mat x = random_mat(D, T * B, rng);
        const Mat h = l.forward(store, x, T);
        const int perm[B] = {2, 0, 1};
        Mat xp(D, T * B);
        for (int t = 0; t < T; ++t) {
            for (int b = 0; b < B; ++b) xp.col(t * B + b) = x.col(t * B + perm[b]);
        }
        const Mat hp = l.forward(store, xp, T);
        for (int b = 0; b < B; ++b) CHECK((hp.col(b) - h.col(perm[b])).cwiseAbs().maxCoeff() < 1e-15);
    }

    TEST_CASE("gradients agree with central differences") {
        ParamStore store;
        Rng rng(5);
        const int D = 3, H = 4, T = 7, B = 2;
        Lstm l(store, "l", D, H, rng);
        Mat x = random_mat(D, T * B, rng);
        const Mat w_last = random_mat(H, B, rng);
        const Mat w_all = random_mat(H, T * B, rng);
        auto loss = [&] {
            const Mat h = l.forward(store, x, T, true);
            return (h.cwiseProduct(w_last)).sum() + (l.outputs().cwiseProduct(w_all)).sum();
        };
        loss();
        store.zero_grad();
        const Mat dx = l.backward(store, w_last, &w_all, true);
        const auto r = check_param_gradients(store, loss);
        CHECK(r.max_error < 1e-6);
        CHECK(r.checked == store.parameter_count());
        loss();
        const auto rx = check_input_gradient(x, dx, loss);
        CHECK(rx.max_error < 1e-6);
    }
}

TEST_SUITE("dense") {
    TEST_CASE("gradients agree with central differences through relu") {
        ParamStore store;
        Rng rng(6);
        Dense d1(store, "a", 5, 7, rng);
        Dense d2(store, "b", 7, 3, rng);
        Relu relu;
        Mat x = random_mat(5, 4, rng);
        const Mat w = random_mat(3, 4, rng);
        auto loss = [&] { return d2.forward(store, relu.forward(d1.forward(store, x))).cwiseProduct(w).sum(); };
        loss();
        store.zero_grad();
        const Mat dx = d1.backward(store, relu.backward(d2.backward(store, w)));
        CHECK(check_param_gradients(store, loss).max_error < 1e-6);
        loss();
        CHECK(check_input_gradient(x, dx, loss).max_error < 1e-6);
    }

    TEST_CASE("constant loss has zero gradient and gradients are linear") {
        ParamStore store;
        Rng rng(7);
        Dense d(store, "a", 4, 2, rng);
        const Mat x = random_mat(4, 3, rng);
        d.forward(store, x);
        store.zero_grad();
        d.backward(store, Mat::Zero(2, 3));
        CHECK(store.grad_norm() == 0.0);

        const Mat w1 = random_mat(2, 3, rng);
        const Mat w2 = random_mat(2, 3, rng);
        store.zero_grad();
        d.backward(store, w1);
        const Mat g1 = store[0].grad;
        store.zero_grad();
        d.backward(store, w2);
        const Mat g2 = store[0].grad;
        store.zero_grad();
        d.backward(store, w1 + w2);
        CHECK((store[0].grad - g1 - g2).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_SUITE("dropout") {
    TEST_CASE("identity when disabled") {
        Rng rng(1);
        Rng xr(2);
        const Mat x = random_mat(4, 4, xr);
        Dropout none(0.0);
        CHECK(none.forward(x, true, rng) == x);
        Dropout d(0.5);
        CHECK(d.forward(x, false, rng) == x);
        CHECK(d.backward(x) == x);
    }

    TEST_CASE("kept fraction over a million units") {
        Rng rng(9);
        Dropout d(0.1);
        const Mat y = d.forward(Mat::Ones(1000, 1000), true, rng);
        const double kept = static_cast<double>((y.array() != 0.0).count()) / 1e6;
        CHECK(std::abs(kept - 0.9) < 0.002);
        CHECK(y.maxCoeff() == doctest::Approx(1.0 / 0.9));
    }

    TEST_CASE("rate outside [0, 1) is rejected") {
        CHECK_THROWS(Dropout(1.0));
        CHECK_THROWS(Dropout(-0.1));
    }
}

TEST_SUITE("adam") {
    TEST_CASE("zero gradient leaves parameters unchanged") {
        ParamStore s;
        s.add("w", 2, 2);
        s[0].value << 1, 2, 3, 4;
        const Mat before = s[0].value;
        adam_step(s, AdamConfig{});
        CHECK(s[0].value == before);
    }

    TEST_CASE("first step moves every entry by lr against the gradient") {
        ParamStore s;
        s.add("w", 1, 3);
        s[0].grad << 0.5, -2.0, 1e-3;
        AdamConfig cfg;
        cfg.lr = 0.01;
        adam_step(s, cfg);
        CHECK(s[0].value(0, 0) == doctest::Approx(-0.01).epsilon(1e-4));
        CHECK(s[0].value(0, 1) == doctest::Approx(0.01).epsilon(1e-4));
        CHECK(s[0].value(0, 2) == doctest::Approx(-0.01).epsilon(1e-4));
    }

    TEST_CASE("identical states give identical updates") {
        ParamStore a;
        a.add("w", 2, 1);
        a[0].grad << 0.3, -0.7;
        ParamStore b = a;
        adam_step(a, AdamConfig{});
        adam_step(b, AdamConfig{});
        CHECK(a[0].value == b[0].value);
    }

    TEST_CASE("soft update one step from zero") {
        ParamStore t;
        t.add("w", 1, 1);
        ParamStore s = t;
        s[0].value(0, 0) = 1.0;
        soft_update(t, s, 0.005);
        CHECK(t[0].value(0, 0) == doctest::Approx(0.005));
    }

    TEST_CASE("grad clipping bounds the global norm") {
        ParamStore s;
        s.add("a", 1, 2);
        s.add("b", 1, 1);
        s[0].grad << 30, 40;
        s[1].grad << 0;
        s.clip_grad_norm(10.0);
        CHECK(s.grad_norm() == doctest::Approx(10.0));
        CHECK(s[0].grad(0, 0) == doctest::Approx(6.0));
    }
}

TEST_SUITE("squashed gaussian") {
    TEST_CASE("eps = 0 gives a_max * tanh(mu)") {
        Mat mu(2, 1);
        mu << 0.4, -1.3;
        const Mat ls = Mat::Constant(2, 1, -1.0);
        const auto s = squashed_sample(mu, ls, Mat::Zero(2, 1), 0.3);
        CHECK(s.action(0, 0) == doctest::Approx(0.3 * std::tanh(0.4)));
        CHECK(s.action(1, 0) == doctest::Approx(0.3 * std::tanh(-1.3)));
    }

    TEST_CASE("density integrates to one") {
        const double a_max = 0.3;
        for (const auto& [mu, ls] : {std::pair{0.3, -0.5}, std::pair{-1.0, 0.0}, std::pair{0.0, -2.0}}) {
            const int n = 200000;
            const double h = 2.0 * a_max / n;
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double a = -a_max + (i + 0.5) * h;
                sum += std::exp(squashed_log_density(a, mu, ls, a_max)) * h;
            }
            CHECK(std::abs(sum - 1.0) < 1e-3);
        }
    }

    TEST_CASE("samples stay strictly inside and log_prob stays finite") {
        Rng rng(3);
        Mat mu = random_mat(10, 500, rng, 20.0);
        Mat ls = random_mat(10, 500, rng, 3.0);
        Mat eps(10, 500);
        for (Eigen::Index j = 0; j < eps.cols(); ++j) {
            for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, j) = rng.normal();
        }
        const auto s = squashed_sample(mu, squash_log_std(ls), eps, 1.0);
        CHECK(s.log_prob.allFinite());
        CHECK(s.squashed.cwiseAbs().maxCoeff() <= 1.0);
        // moderate pre-activations never saturate the double tanh
        const auto m = squashed_sample(random_mat(10, 500, rng, 2.0), Mat::Constant(10, 500, -1.0), eps, 0.3);
        CHECK(m.action.cwiseAbs().maxCoeff() < 0.3);
    }

    TEST_CASE("stable log(1 - tanh^2) matches the direct form") {
        for (double u : {-3.0, -0.5, 0.0, 0.7, 4.0}) {
            CHECK(log1m_tanh_sq(u) == doctest::Approx(std::log(1.0 - std::tanh(u) * std::tanh(u))).epsilon(1e-12));
        }
        CHECK(std::isfinite(log1m_tanh_sq(400.0)));
    }

    TEST_CASE("log_std squashing stays within bounds") {
        Mat raw(1, 3);
        raw << -100, 0, 100;
        const Mat ls = squash_log_std(raw);
        CHECK(ls(0, 0) == doctest::Approx(kLogStdMin));
        CHECK(ls(0, 2) == doctest::Approx(kLogStdMax));
        CHECK(ls(0, 1) == doctest::Approx(0.5 * (kLogStdMin + kLogStdMax)));
    }

    TEST_CASE("backward agrees with central differences") {
        Rng rng(8);
        Mat mu = random_mat(3, 4, rng);
        Mat ls = random_mat(3, 4, rng);
        Mat eps(3, 4);
        for (Eigen::Index j = 0; j < 4; ++j) {
            for (Eigen::Index i = 0; i < 3; ++i) eps(i, j) = rng.normal();
        }
        const Mat wa = random_mat(3, 4, rng);
        const Mat wl = random_mat(1, 4, rng);
        auto loss = [&] {
            const auto s = squashed_sample(mu, ls, eps, 0.3);
            return s.action.cwiseProduct(wa).sum() + s.log_prob.cwiseProduct(wl).sum();
        };
        const auto s = squashed_sample(mu, ls, eps, 0.3);
        Mat dmu, dls;
        squashed_backward(s, wa, wl, dmu, dls);
        CHECK(check_input_gradient(mu, dmu, loss, 1e-5, "mu").max_error < 1e-6);
        CHECK(check_input_gradient(ls, dls, loss, 1e-5, "log_std").max_error < 1e-6);
    }
}

TEST_SUITE("checkpoint") {
    TEST_CASE("round trip restores every array exactly") {
        ParamStore a;
        Rng rng(1);
        Lstm l(a, "enc", 3, 4, rng);
        Dense d(a, "fc", 4, 2, rng);
        std::vector<NamedArray> arrays;
        append_store(arrays, "net/", a);
        const auto path = std::filesystem::temp_directory_path() / "qmrl_test_ckpt.bin";
        write_container(path, arrays);

        ParamStore b;
        Rng other(2);
        Lstm l2(b, "enc", 3, 4, other);
        Dense d2(b, "fc", 4, 2, other);
        load_store(read_container(path), "net/", b);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);

        ParamStore wrong;
        Dense d3(wrong, "fc", 5, 2, other);
        CHECK_THROWS_AS(load_store(read_container(path), "net/", wrong), std::runtime_error);
        ParamStore missing;
        Dense d4(missing, "nope", 4, 2, other);
        CHECK_THROWS_AS(load_store(read_container(path), "net/", missing), std::runtime_error);
        std::filesystem::remove(path);
    }

    TEST_CASE("bad magic is rejected") {
        const auto path = std::filesystem::temp_directory_path() / "qmrl_test_bad.bin";
        std::ofstream(path) << "NOTACKPT........";
        CHECK_THROWS(read_container(path));
        std::filesystem::remove(path);
    }
}
