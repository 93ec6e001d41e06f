#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qmrl/rng.hpp"
#include "qmrl/sac/encoding.hpp"

namespace qmrl::replay {

/// Binary tree of cumulative priorities. Leaves are padded to a power of two;
/// every internal node is recomputed as the sum of its children on update, so
/// the root equals the sum of leaves up to a single rounding per level.
class SumTree {
  public:
    explicit SumTree(std::size_t capacity);

    void set(std::size_t leaf, double value);
    double get(std::size_t leaf) const { return nodes_[base_ + leaf]; }
    double total() const { return nodes_[1]; }
    std::size_t capacity() const { return capacity_; }

    /// Leaf whose cumulative interval contains `prefix` (0 <= prefix < total).
    std::size_t find(double prefix) const;

  private:
    std::size_t capacity_;
    std::size_t base_;
    std::vector<double> nodes_;
};

struct Transition {
    std::shared_ptr<const sac::Observation> state;
    therapy::Action action{};
    double reward = 0.0;
    std::shared_ptr<const sac::Observation> next_state;
    bool done = false;
};

struct ReplayConfig {
    std::size_t capacity = 1'000'000;
    double alpha = 0.6;           // priority exponent
    double beta_start = 0.4;      // importance-weight exponent, annealed to beta_end
    double beta_end = 1.0;
    double priority_floor = 1e-3;
};

struct SampledBatch {
    std::vector<const Transition*> items;
    std::vector<std::uint64_t> ids;
    std::vector<double> weights;    // importance weights, max 1
};

/// Proportional prioritized replay with FIFO eviction. Ids increase
/// monotonically with every push; ids of evicted items become stale.
class PrioritizedReplay {
  public:
    explicit PrioritizedReplay(const ReplayConfig& config = {});

    std::uint64_t push(Transition t);

    /// Stratified proportional sample. Throws std::logic_error when fewer than
    /// `batch` transitions are stored.
    SampledBatch sample(std::size_t batch, double beta, Rng& rng) const;

    /// priority <- |td| + floor. Stale ids are skipped and counted.
    void update_priorities(std::span<const std::uint64_t> ids, std::span<const double> td_errors);

    /// Beta for training progress in [0, 1].
    double beta_at(double progress) const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return config_.capacity; }
    std::uint64_t next_id() const { return next_id_; }
    std::size_t stale_updates() const { return stale_; }
    /// Largest raw priority currently stored (1 for an empty buffer).
    double max_priority() const;
    /// Raw priority (before the exponent) of a live id.
    double priority(std::uint64_t id) const;
    const SumTree& tree() const { return tree_; }
    const Transition& at(std::uint64_t id) const;
    bool is_live(std::uint64_t id) const;

  private:
    ReplayConfig config_;
    SumTree tree_;
    std::vector<Transition> items_;
    std::vector<double> max_nodes_;    // max-tree over raw priorities, same layout as the sum tree
    std::size_t max_base_ = 1;
    std::size_t size_ = 0;
    std::uint64_t next_id_ = 0;
    std::size_t stale_ = 0;

    void set_priority(std::size_t slot, double raw);
};

}    // namespace qmrl::replay
