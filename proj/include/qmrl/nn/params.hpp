#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qmrl::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// A named trainable array with its gradient and Adam moments.
struct Param {
    std::string name;
    Mat value;
    Mat grad;
    Mat m;
    Mat v;
};

/// Owns every trainable array of one network. Layers refer to entries by
/// index, so copying a network copies its parameters and keeps layers valid.
class ParamStore {
  public:
    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }
    std::size_t size() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    const Param* find(std::string_view name) const;
    Param* find(std::string_view name);

    void zero_grad();
    double grad_norm() const;
    /// Rescales gradients so that their global L2 norm is at most max_norm.
    void clip_grad_norm(double max_norm);
    bool all_finite() const;
    std::size_t parameter_count() const;

    long adam_steps = 0;

  private:
    std::vector<Param> params_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam update using the gradients held in the store.
void adam_step(ParamStore& store, const AdamConfig& cfg);

/// target <- (1 - tau) * target + tau * source, entry by entry.
void soft_update(ParamStore& target, const ParamStore& source, double tau);

}    // namespace qmrl::nn
