#include "qmrl/r2r.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

namespace qmrl::r2r {

CellArray<CellMetrics> per_cell_metrics(const sim::SimTrace& trace, double window_minutes) {
    CellArray<std::vector<double>> samples;
    CellArray<int> counts{};
    const auto& events = trace.meals.events;
    const int n = static_cast<int>(trace.cgm.size());
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& meal = events[k];
        double end = meal.minute + window_minutes;
        if (k + 1 < events.size()) {
            end = std::min(end, static_cast<double>(events[k + 1].minute));
        }
        const auto c = static_cast<std::size_t>(meal.category);
        const auto w = static_cast<std::size_t>(therapy::time_window(meal.minute % sim::kMinutesPerDay));
        ++counts[c][w];
        const int first = (meal.minute + sim::kNativeSampleMinutes - 1) / sim::kNativeSampleMinutes;
        for (int i = first; i < n && i * sim::kNativeSampleMinutes < end; ++i) {
            samples[c][w].push_back(trace.cgm[static_cast<std::size_t>(i)]);
        }
    }
    CellArray<CellMetrics> out{};
    for (std::size_t c = 0; c < kNumCategories; ++c) {
        for (std::size_t w = 0; w < kNumTimeWindows; ++w) {
            if (samples[c][w].empty()) {
                continue;
            }
            out[c][w].has_data = true;
            out[c][w].meals = counts[c][w];
            out[c][w].metrics = metrics::compute_metrics(samples[c][w], {}, 1.0);
        }
    }
    return out;
}

DoseDeltaGrid r2r_grid(const CellArray<CellMetrics>& cells, double k_hypo, double k_hyper) {
    DoseDeltaGrid grid{};
    for (std::size_t c = 0; c < kNumCategories; ++c) {
        for (std::size_t w = 0; w < kNumTimeWindows; ++w) {
            if (!cells[c][w].has_data) {
                continue;
            }
            const auto [hypo, hyper] = metrics::r2r_components(cells[c][w].metrics);
            if (hypo > 0.0) {
                grid[c][w] = -k_hypo * hypo;
            } else if (hyper > 0.0) {
                grid[c][w] = k_hyper * hyper;
            }
        }
    }
    return grid;
}

DoseDeltaGrid compose(const PolicyDeltas& d) {
    DoseDeltaGrid g{};
    for (std::size_t c = 0; c < kNumCategories; ++c) {
        for (std::size_t w = 0; w < kNumTimeWindows; ++w) {
            g[c][w] = d.category[c] + d.window[w] + d.category[c] * d.window[w];
        }
    }
    return g;
}

double deltas_objective(const DoseDeltaGrid& grid, const CellArray<bool>& mask, const PolicyDeltas& d,
                        double lambda) {
    const auto fit = compose(d);
    double f = 0.0;
    for (std::size_t c = 0; c < kNumCategories; ++c) {
        for (std::size_t w = 0; w < kNumTimeWindows; ++w) {
            if (mask[c][w]) {
                f += (fit[c][w] - grid[c][w]) * (fit[c][w] - grid[c][w]);
            }
        }
    }
    for (double v : d.category) {
        f += lambda * v * v;
    }
    for (double v : d.window) {
        f += lambda * v * v;
    }
    return f;
}

PolicyDeltas solve_policy_deltas(const DoseDeltaGrid& grid, const CellArray<bool>& mask, const SolveOptions& opt) {
    constexpr int kVars = kNumCategories + kNumTimeWindows;
    Eigen::Matrix<double, kVars, 1> x = Eigen::Matrix<double, kVars, 1>::Zero();
    auto unpack = [](const Eigen::Matrix<double, kVars, 1>& v) {
        PolicyDeltas d;
        for (int i = 0; i < kNumCategories; ++i) {
            d.category[static_cast<std::size_t>(i)] = v(i);
        }
        for (int j = 0; j < kNumTimeWindows; ++j) {
            d.window[static_cast<std::size_t>(j)] = v(kNumCategories + j);
        }
        return d;
    };

    double damping = 1e-4;
    double f = deltas_objective(grid, mask, unpack(x), opt.lambda);
    for (int it = 0; it < opt.iterations; ++it) {
        // Normal equations of the residuals r_ij = b_i + a_j + b_i a_j - g_ij
        // plus sqrt(lambda) x.
        Eigen::Matrix<double, kVars, kVars> jtj = opt.lambda * Eigen::Matrix<double, kVars, kVars>::Identity();
        Eigen::Matrix<double, kVars, 1> jtr = opt.lambda * x;
        for (int c = 0; c < kNumCategories; ++c) {
            for (int w = 0; w < kNumTimeWindows; ++w) {
                if (!mask[static_cast<std::size_t>(c)][static_cast<std::size_t>(w)]) {
                    continue;
                }
                const double b = x(c);
                const double a = x(kNumCategories + w);
                const double r = b + a + b * a - grid[static_cast<std::size_t>(c)][static_cast<std::size_t>(w)];
                Eigen::Matrix<double, kVars, 1> row = Eigen::Matrix<double, kVars, 1>::Zero();
                row(c) = 1.0 + a;
                row(kNumCategories + w) = 1.0 + b;
                jtj += row * row.transpose();
                jtr += r * row;
            }
        }
        bool accepted = false;
        for (int attempt = 0; attempt < 20 && !accepted; ++attempt) {
            const Eigen::Matrix<double, kVars, kVars> lhs =
                jtj + damping * Eigen::Matrix<double, kVars, kVars>::Identity();
            const Eigen::Matrix<double, kVars, 1> step = -lhs.ldlt().solve(jtr);
            const Eigen::Matrix<double, kVars, 1> trial = x + step;
            const double ft = deltas_objective(grid, mask, unpack(trial), opt.lambda);
            if (ft <= f) {
                x = trial;
                f = ft;
                damping = std::max(damping * 0.3, 1e-12);
                accepted = true;
            } else {
                damping *= 10.0;
            }
        }
        if (!accepted) {
            break;
        }
    }
    auto d = unpack(x);
    for (auto& v : d.category) {
        v = std::clamp(v, -1.0, 1.0);
    }
    for (auto& v : d.window) {
        v = std::clamp(v, -1.0, 1.0);
    }
    return d;
}

PolicyDeltas solve_policy_deltas(const DoseDeltaGrid& grid, const SolveOptions& opt) {
    CellArray<bool> all{};
    for (auto& row : all) {
        row.fill(true);
    }
    return solve_policy_deltas(grid, all, opt);
}

therapy::Action to_action(const PolicyDeltas& d, double action_scale) {
    therapy::Action a{};
    for (std::size_t i = 0; i < kNumCategories; ++i) {
        a[i] = std::clamp(d.category[i] / action_scale, -1.0, 1.0);
    }
    for (std::size_t j = 0; j < kNumTimeWindows; ++j) {
        a[kNumCategories + j] = std::clamp(d.window[j] / action_scale, -1.0, 1.0);
    }
    return a;
}

therapy::Action r2r_action(const sim::SimTrace& trace, double action_scale) {
    const auto cells = per_cell_metrics(trace);
    CellArray<bool> mask{};
    for (std::size_t c = 0; c < kNumCategories; ++c) {
        for (std::size_t w = 0; w < kNumTimeWindows; ++w) {
            mask[c][w] = cells[c][w].has_data;
        }
    }
    return to_action(solve_policy_deltas(r2r_grid(cells), mask), action_scale);
}

}    // namespace qmrl::r2r
