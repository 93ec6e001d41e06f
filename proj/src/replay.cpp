#include "qmrl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmrl::replay {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("SumTree: capacity must be positive");
    }
    base_ = 1;
    while (base_ < capacity) {
        base_ <<= 1;
    }
    nodes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value) {
    if (leaf >= capacity_ || !(value >= 0.0)) {
        throw std::invalid_argument("SumTree::set: bad leaf or value");
    }
    std::size_t i = base_ + leaf;
    nodes_[i] = value;
    for (i >>= 1; i >= 1; i >>= 1) {
        nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
    }
}

std::size_t SumTree::find(double prefix) const {
    std::size_t i = 1;
    while (i < base_) {
        const double left = nodes_[2 * i];
        if (prefix < left || nodes_[2 * i + 1] <= 0.0) {
            i = 2 * i;
        } else {
            prefix -= left;
            i = 2 * i + 1;
        }
    }
    return i - base_;
}

PrioritizedReplay::PrioritizedReplay(const ReplayConfig& config) : config_(config), tree_(config.capacity) {
    while (max_base_ < config.capacity) {
        max_base_ <<= 1;
    }
    max_nodes_.assign(2 * max_base_, 0.0);
}

void PrioritizedReplay::set_priority(std::size_t slot, double raw) {
    std::size_t i = max_base_ + slot;
    max_nodes_[i] = raw;
    for (i >>= 1; i >= 1; i >>= 1) {
        max_nodes_[i] = std::max(max_nodes_[2 * i], max_nodes_[2 * i + 1]);
    }
    tree_.set(slot, std::pow(raw, config_.alpha));
}

double PrioritizedReplay::max_priority() const {
    return size_ == 0 ? 1.0 : max_nodes_[1];
}

std::uint64_t PrioritizedReplay::push(Transition t) {
    const double p = max_priority();
    const std::uint64_t id = next_id_++;
    const std::size_t slot = id % config_.capacity;
    if (slot == items_.size()) {
        items_.push_back(std::move(t));
    } else {
        items_[slot] = std::move(t);
    }
    set_priority(slot, p);
    size_ = std::min(size_ + 1, config_.capacity);
    return id;
}

bool PrioritizedReplay::is_live(std::uint64_t id) const {
    return id < next_id_ && id + size_ >= next_id_;
}

const Transition& PrioritizedReplay::at(std::uint64_t id) const {
    if (!is_live(id)) {
        throw std::out_of_range("PrioritizedReplay::at: stale id");
    }
    return items_[id % config_.capacity];
}

double PrioritizedReplay::priority(std::uint64_t id) const {
    if (!is_live(id)) {
        throw std::out_of_range("PrioritizedReplay::priority: stale id");
    }
    return max_nodes_[max_base_ + id % config_.capacity];
}

double PrioritizedReplay::beta_at(double progress) const {
    const double p = std::clamp(progress, 0.0, 1.0);
    return config_.beta_start + p * (config_.beta_end - config_.beta_start);
}

SampledBatch PrioritizedReplay::sample(std::size_t batch, double beta, Rng& rng) const {
    if (batch == 0 || size_ < batch) {
        throw std::logic_error("PrioritizedReplay::sample: buffer holds fewer transitions than the batch");
    }
    SampledBatch out;
    out.items.reserve(batch);
    out.ids.reserve(batch);
    out.weights.reserve(batch);
    const double total = tree_.total();
    const double segment = total / static_cast<double>(batch);
    // Slot -> id: the newest item sits in slot (next_id-1) % capacity.
    const std::uint64_t cap = config_.capacity;
    double max_w = 0.0;
    for (std::size_t k = 0; k < batch; ++k) {
        double prefix = (static_cast<double>(k) + rng.uniform()) * segment;
        prefix = std::min(prefix, std::nextafter(total, 0.0));
        const std::size_t slot = tree_.find(prefix);
        const std::uint64_t newest_slot = (next_id_ - 1) % cap;
        const std::uint64_t back = (newest_slot + cap - slot) % cap;
        const std::uint64_t id = next_id_ - 1 - back;
        const double prob = tree_.get(slot) / total;
        const double w = std::pow(static_cast<double>(size_) * prob, -beta);
        max_w = std::max(max_w, w);
        out.items.push_back(&items_[slot]);
        out.ids.push_back(id);
        out.weights.push_back(w);
    }
    for (auto& w : out.weights) {
        w /= max_w;
    }
    return out;
}

void PrioritizedReplay::update_priorities(std::span<const std::uint64_t> ids, std::span<const double> td_errors) {
    if (ids.size() != td_errors.size()) {
        throw std::invalid_argument("update_priorities: ids and errors differ in length");
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!is_live(ids[k])) {
            ++stale_;
            continue;
        }
        const double p = std::abs(td_errors[k]) + config_.priority_floor;
        set_priority(ids[k] % config_.capacity, p);
    }
}

}    // namespace qmrl::replay
