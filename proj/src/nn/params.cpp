#include "qmrl/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace qmrl::nn {

std::size_t ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    Param p;
    p.name = std::move(name);
    p.value = Mat::Zero(rows, cols);
    p.grad = Mat::Zero(rows, cols);
    p.m = Mat::Zero(rows, cols);
    p.v = Mat::Zero(rows, cols);
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

const Param* ParamStore::find(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

Param* ParamStore::find(std::string_view name) {
    return const_cast<Param*>(std::as_const(*this).find(name));
}

void ParamStore::zero_grad() {
    for (auto& p : params_) {
        p.grad.setZero();
    }
}

double ParamStore::grad_norm() const {
    double sq = 0.0;
    for (const auto& p : params_) {
        sq += p.grad.squaredNorm();
    }
    return std::sqrt(sq);
}

void ParamStore::clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& p : params_) {
            p.grad *= scale;
        }
    }
}

bool ParamStore::all_finite() const {
    for (const auto& p : params_) {
        if (!p.value.allFinite()) {
            return false;
        }
    }
    return true;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += static_cast<std::size_t>(p.value.size());
    }
    return n;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
    ++store.adam_steps;
    const double t = static_cast<double>(store.adam_steps);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& p : store) {
        p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
        p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= cfg.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
    }
}

void soft_update(ParamStore& target, const ParamStore& source, double tau) {
    if (target.size() != source.size()) {
        throw std::invalid_argument("soft_update: stores differ in layout");
    }
    for (std::size_t i = 0; i < target.size(); ++i) {
        target[i].value = (1.0 - tau) * target[i].value + tau * source[i].value;
    }
}

}    // namespace qmrl::nn
