#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "qmrl/replay.hpp"
#include "qmrl/rng.hpp"

using namespace qmrl;
using namespace qmrl::replay;

namespace {

Transition tagged(double reward) {
    Transition t;
    t.reward = reward;
    return t;
}

/// Exact reference sum of the leaves, accumulated in index order.
double leaf_sum(const SumTree& tree) {
    double s = 0.0;
    for (std::size_t i = 0; i < tree.capacity(); ++i) s += tree.get(i);
    return s;
}

ReplayConfig small(std::size_t capacity, double alpha = 0.6) {
    ReplayConfig c;
    c.capacity = capacity;
    c.alpha = alpha;
    return c;
}

}    // namespace

TEST_SUITE("sum tree") {
    TEST_CASE("find walks cumulative intervals") {
        SumTree t(5);
        const double v[] = {1.0, 0.0, 2.0, 3.0, 4.0};
        for (std::size_t i = 0; i < 5; ++i) t.set(i, v[i]);
        CHECK(t.total() == 10.0);
        CHECK(t.find(0.0) == 0);
        CHECK(t.find(0.999) == 0);
        CHECK(t.find(1.0) == 2);
        CHECK(t.find(2.5) == 2);
        CHECK(t.find(3.0) == 3);
        CHECK(t.find(9.99) == 4);
    }

    TEST_CASE("root equals the sum of leaves under random updates") {
        Rng rng(3);
        SumTree t(1000);
        for (int k = 0; k < 20000; ++k) {
            t.set(static_cast<std::size_t>(rng.uniform_int(0, 999)), rng.uniform(0.0, 5.0));
            if (k % 997 == 0) {
                CHECK(std::abs(t.total() - leaf_sum(t)) <= 1e-9 * leaf_sum(t));
            }
        }
        CHECK(std::abs(t.total() - leaf_sum(t)) <= 1e-9 * leaf_sum(t));
    }
}

TEST_SUITE("prioritized replay") {
    TEST_CASE("push and FIFO eviction") {
        PrioritizedReplay r(small(2));
        CHECK(r.push(tagged(1)) == 0);
        CHECK(r.size() == 1);
        r.push(tagged(2));
        r.push(tagged(3));
        CHECK(r.size() == 2);
        CHECK_FALSE(r.is_live(0));
        CHECK(r.is_live(1));
        CHECK(r.is_live(2));
        CHECK(r.at(1).reward == 2.0);
        CHECK(r.at(2).reward == 3.0);
        CHECK_THROWS(r.at(0));
    }

    TEST_CASE("capacity is preserved exactly") {
        PrioritizedReplay r(small(7));
        for (int i = 0; i < 100; ++i) {
            r.push(tagged(i));
            CHECK(r.size() == std::min<std::size_t>(static_cast<std::size_t>(i) + 1, 7));
        }
        for (std::uint64_t id = 93; id < 100; ++id) CHECK(r.at(id).reward == static_cast<double>(id));
    }

    TEST_CASE("priority floor") {
        PrioritizedReplay r(small(4));
        const auto a = r.push(tagged(0));
        const auto b = r.push(tagged(0));
        const std::vector<std::uint64_t> ids{a, b};
        const std::vector<double> td{0.0, 1.0};
        r.update_priorities(ids, td);
        CHECK(r.priority(a) == doctest::Approx(1e-3));
        CHECK(r.priority(b) == doctest::Approx(1.001));
        CHECK(r.tree().total() == doctest::Approx(std::pow(1e-3, 0.6) + std::pow(1.001, 0.6)));
    }

    TEST_CASE("new items take the current maximum priority") {
        PrioritizedReplay r(small(4));
        CHECK(r.max_priority() == 1.0);
        const auto a = r.push(tagged(0));
        CHECK(r.priority(a) == 1.0);
        const std::vector<std::uint64_t> ids{a};
        const std::vector<double> td{4.0};
        r.update_priorities(ids, td);
        const auto b = r.push(tagged(0));
        CHECK(r.priority(b) == doctest::Approx(4.001));
        const std::vector<double> small_td{0.5};
        r.update_priorities(std::vector<std::uint64_t>{a}, small_td);
        r.update_priorities(std::vector<std::uint64_t>{b}, small_td);
        // the maximum tracks current priorities, not the historical peak
        CHECK(r.max_priority() == doctest::Approx(0.501));
    }

    TEST_CASE("stale ids are skipped and counted") {
        PrioritizedReplay r(small(2));
        r.push(tagged(0));
        r.push(tagged(0));
        r.push(tagged(0));
        const double before = r.tree().total();
        const std::vector<std::uint64_t> ids{0, 7};
        const std::vector<double> td{5.0, 5.0};
        r.update_priorities(ids, td);
        CHECK(r.stale_updates() == 2);
        CHECK(r.tree().total() == before);
    }

    TEST_CASE("sampling an underfull buffer throws") {
        PrioritizedReplay r(small(10));
        r.push(tagged(0));
        Rng rng(1);
        CHECK_THROWS_AS(r.sample(2, 0.4, rng), std::logic_error);
    }

    TEST_CASE("equal priorities sample uniformly (chi-square)") {
        const int n = 50;
        PrioritizedReplay r(small(n));
        for (int i = 0; i < n; ++i) r.push(tagged(i));
        Rng rng(11);
        std::vector<int> counts(n, 0);
        int draws = 0;
        while (draws < 100000) {
            const auto s = r.sample(n, 0.4, rng);
            for (auto id : s.ids) ++counts[static_cast<std::size_t>(id)];
            for (double w : s.weights) CHECK(w == doctest::Approx(1.0));
            draws += n;
        }
        const double expected = draws / static_cast<double>(n);
        double chi2 = 0.0;
        for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
        // upper 1 % point of chi-square with 49 degrees of freedom
        CHECK(chi2 < 74.92);
    }

    TEST_CASE("a 9x priority is drawn about 9x as often with alpha = 1") {
        const int n = 10;
        PrioritizedReplay r(small(n, 1.0));
        std::vector<std::uint64_t> ids;
        for (int i = 0; i < n; ++i) ids.push_back(r.push(tagged(i)));
        std::vector<double> td(n, 1.0 - 1e-3);
        td[3] = 9.0 - 1e-3;
        r.update_priorities(ids, td);
        Rng rng(5);
        std::vector<int> counts(n, 0);
        for (int k = 0; k < 7200; ++k) {
            for (auto id : r.sample(10, 0.4, rng).ids) ++counts[static_cast<std::size_t>(id)];
        }
        double others = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i != 3) others += counts[static_cast<std::size_t>(i)];
        }
        CHECK(counts[3] / (others / 9.0) == doctest::Approx(9.0).epsilon(0.05));
    }

    TEST_CASE("empirical frequencies follow p^alpha / sum p^alpha") {
        const int n = 6;
        PrioritizedReplay r(small(n, 0.6));
        std::vector<std::uint64_t> ids;
        for (int i = 0; i < n; ++i) ids.push_back(r.push(tagged(i)));
        const std::vector<double> td{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
        r.update_priorities(ids, td);
        double z = 0.0;
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) {
            p[static_cast<std::size_t>(i)] = std::pow(td[static_cast<std::size_t>(i)] + 1e-3, 0.6);
            z += p[static_cast<std::size_t>(i)];
        }
        Rng rng(8);
        std::vector<int> counts(n, 0);
        const int rounds = 20000;
        for (int k = 0; k < rounds; ++k) {
            for (auto id : r.sample(6, 0.4, rng).ids) ++counts[static_cast<std::size_t>(id)];
        }
        for (int i = 0; i < n; ++i) {
            const double expected = p[static_cast<std::size_t>(i)] / z;
            const double got = counts[static_cast<std::size_t>(i)] / (6.0 * rounds);
            CHECK(std::abs(got - expected) < 4.0 * std::sqrt(expected * (1 - expected) / (6.0 * rounds)) + 1e-4);
        }
    }

    TEST_CASE("importance weights follow (N P)^-beta normalised by the batch max") {
        const int n = 4;
        PrioritizedReplay r(small(n, 1.0));
        std::vector<std::uint64_t> ids;
        for (int i = 0; i < n; ++i) ids.push_back(r.push(tagged(i)));
        const std::vector<double> td{1.0 - 1e-3, 2.0 - 1e-3, 3.0 - 1e-3, 4.0 - 1e-3};
        r.update_priorities(ids, td);
        Rng rng(2);
        const double beta = 0.5;
        const auto s = r.sample(4, beta, rng);
        double wmax = 0.0;
        std::vector<double> raw;
        for (auto id : s.ids) {
            const double prob = (static_cast<double>(id) + 1.0) / 10.0;
            raw.push_back(std::pow(n * prob, -beta));
            wmax = std::max(wmax, raw.back());
        }
        for (std::size_t i = 0; i < raw.size(); ++i) CHECK(s.weights[i] == doctest::Approx(raw[i] / wmax));
    }

    TEST_CASE("beta anneals linearly and clamps") {
        PrioritizedReplay r;
        CHECK(r.beta_at(0.0) == doctest::Approx(0.4));
        CHECK(r.beta_at(0.5) == doctest::Approx(0.7));
        CHECK(r.beta_at(1.0) == doctest::Approx(1.0));
        CHECK(r.beta_at(2.0) == doctest::Approx(1.0));
    }

    TEST_CASE("tree root tracks pushes and updates interleaved at random") {
        PrioritizedReplay r(small(64));
        Rng rng(21);
        std::vector<std::uint64_t> recent;
        for (int k = 0; k < 5000; ++k) {
            if (rng.bernoulli(0.4) || r.size() == 0) {
                recent.push_back(r.push(tagged(k)));
            } else {
                const auto id = recent[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(recent.size()) - 1))];
                const std::vector<std::uint64_t> ids{id};
                const std::vector<double> td{rng.uniform(0.0, 10.0)};
                r.update_priorities(ids, td);
            }
        }
        double s = 0.0;
        for (std::uint64_t id = r.next_id() - r.size(); id < r.next_id(); ++id) s += std::pow(r.priority(id), 0.6);
        CHECK(std::abs(r.tree().total() - s) <= 1e-9 * s);
        CHECK(std::abs(r.tree().total() - leaf_sum(r.tree())) <= 1e-9 * s);
    }
}
