#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "qmrl/nn/params.hpp"

namespace qmrl::nn {

struct GradCheckResult {
    double max_error = 0.0;    // |analytic - numeric| / max(1, |analytic|)
    std::string worst;         // "name[row,col]" of the largest error
    std::size_t checked = 0;
};

/// Compares the gradients already stored in `store` with central differences
/// of `loss`. The loss closure must not touch the stored gradients. With
/// max_per_param > 0 only that many evenly spaced entries per array are probed.
GradCheckResult check_param_gradients(ParamStore& store, const std::function<double()>& loss, double h = 1e-5,
                                      std::size_t max_per_param = 0);

/// Same check for an input array with a separately computed analytic gradient.
GradCheckResult check_input_gradient(Mat& x, const Mat& analytic, const std::function<double()>& loss,
                                     double h = 1e-5, const std::string& name = "input");

}    // namespace qmrl::nn
