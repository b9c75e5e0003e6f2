#pragma once
#include "mflab/environment.hpp"
#include "mflab/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mflab {

/// |first-order-condition ratio - 1| per optimality condition; zero exactly
/// on an Euler path. The money distance is absent when R_t == 1.
struct FocDistances {
    std::optional<double> euler;
    std::optional<double> money;
    std::optional<double> labor;
};

/// Distances of a transition pair (t, t+1) from the household first-order
/// conditions, with next-period realized values standing in for expectations.
FocDistances foc_distances(const StepInfo& now, const StepInfo& next, const ModelParams& p);

enum class PiConvention { Net, Level };

/// Mean signed and mean absolute percent deviation of samples from a
/// reference value. For inflation the net convention measures (x-1) against
/// (ref-1).
struct Deviation {
    double mean_pct;
    double mean_abs_pct;
};

Deviation deviation_from(std::span<const double> samples, double reference);

struct SsDistances {
    Deviation pi, b, n, m, u;
};

/// Per-variable steady-state distances of episode-endpoint samples.
/// Throws std::domain_error when a reference value is zero under the chosen
/// convention.
SsDistances ss_distances(std::span<const double> pi_samples,
                         std::span<const double> b_samples,
                         std::span<const double> n_samples,
                         std::span<const double> m_samples,
                         std::span<const double> u_samples,
                         const SteadyState& ss,
                         PiConvention convention = PiConvention::Net);

struct LearningCurve {
    std::vector<double> smoothed;   ///< centered moving average
    std::vector<double> lower;      ///< smoothed - 2 rolling std
    std::vector<double> upper;      ///< smoothed + 2 rolling std
    std::vector<double> normalized; ///< smoothed / max(smoothed)
};

/// Centered window-25 moving average with +-2 rolling-standard-deviation
/// bands; edges use the available part of the window.
LearningCurve learning_curve(std::span<const double> series, int window = 25);

} // namespace mflab
