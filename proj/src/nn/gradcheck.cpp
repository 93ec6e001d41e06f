#include "qmrl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace qmrl::nn {

namespace {

void probe(Mat& value, const Mat& analytic, Eigen::Index k, const std::function<double()>& loss, double h,
           const std::string& name, GradCheckResult& out) {
    double& v = value.data()[k];
    const double saved = v;
    v = saved + h;
    const double up = loss();
    v = saved - h;
    const double down = loss();
    v = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.data()[k];
    const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    ++out.checked;
    if (err > out.max_error || out.worst.empty()) {
        out.max_error = std::max(out.max_error, err);
        const auto r = k % value.rows();
        const auto c = k / value.rows();
        out.worst = fmt::format("{}[{},{}]", name, r, c);
    }
}

}    // namespace

GradCheckResult check_param_gradients(ParamStore& store, const std::function<double()>& loss, double h,
                                      std::size_t max_per_param) {
    GradCheckResult out;
    for (auto& p : store) {
        const auto n = p.value.size();
        Eigen::Index stride = 1;
        if (max_per_param > 0 && static_cast<std::size_t>(n) > max_per_param) {
            stride = n / static_cast<Eigen::Index>(max_per_param);
        }
        for (Eigen::Index k = 0; k < n; k += stride) {
            probe(p.value, p.grad, k, loss, h, p.name, out);
        }
    }
    return out;
}

GradCheckResult check_input_gradient(Mat& x, const Mat& analytic, const std::function<double()>& loss, double h,
                                     const std::string& name) {
    GradCheckResult out;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        probe(x, analytic, k, loss, h, name, out);
    }
    return out;
}

}    // namespace qmrl::nn
