#pragma once

#include <array>

#include "qmrl/metrics.hpp"
#include "qmrl/sim/simulate.hpp"
#include "qmrl/therapy.hpp"

namespace qmrl::r2r {

using therapy::kNumCategories;
using therapy::kNumTimeWindows;

template <typename T>
using CellArray = std::array<std::array<T, kNumTimeWindows>, kNumCategories>;

/// Relative dose change per (category, window) cell.
using DoseDeltaGrid = CellArray<double>;

inline constexpr double kDefaultGain = 0.1;
inline constexpr double kPostprandialMinutes = 360.0;

struct CellMetrics {
    bool has_data = false;
    int meals = 0;
    metrics::GlycemicMetrics metrics;
};

/// Pools the glucose samples following every meal of a cell, from the meal
/// up to `window_minutes` later or the next meal, whichever is sooner.
CellArray<CellMetrics> per_cell_metrics(const sim::SimTrace& trace, double window_minutes = kPostprandialMinutes);

/// -k r_hypo when hypoglycaemia thresholds are exceeded, else +k r_hyper,
/// else 0. Cells without meals get 0.
DoseDeltaGrid r2r_grid(const CellArray<CellMetrics>& cells, double k_hypo = kDefaultGain,
                       double k_hyper = kDefaultGain);

struct PolicyDeltas {
    std::array<double, kNumCategories> category{};
    std::array<double, kNumTimeWindows> window{};
};

struct SolveOptions {
    double lambda = 1e-3;
    int iterations = 50;
};

/// Fits (1 + db_i)(1 + da_j) - 1 to the grid over the cells in `mask` with a
/// ridge penalty, by damped Gauss-Newton from zero. Outputs are clamped to [-1, 1].
PolicyDeltas solve_policy_deltas(const DoseDeltaGrid& grid, const CellArray<bool>& mask, const SolveOptions& opt = {});
PolicyDeltas solve_policy_deltas(const DoseDeltaGrid& grid, const SolveOptions& opt = {});

/// Objective minimised by solve_policy_deltas.
double deltas_objective(const DoseDeltaGrid& grid, const CellArray<bool>& mask, const PolicyDeltas& d,
                        double lambda);

/// Grid implied by a pair of delta vectors.
DoseDeltaGrid compose(const PolicyDeltas& d);

/// Relative deltas expressed as an action for apply_action with the given scale.
therapy::Action to_action(const PolicyDeltas& d, double action_scale = therapy::kDefaultActionScale);

/// One R2R update of a QM policy from the trace it produced.
therapy::Action r2r_action(const sim::SimTrace& trace, double action_scale = therapy::kDefaultActionScale);

}    // namespace qmrl::r2r
