#include "mflab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mflab {

FocDistances foc_distances(const StepInfo& now, const StepInfo& next, const ModelParams& p) {
    FocDistances d;
    d.euler = std::fabs(p.beta * std::pow(next.c / now.c, -p.sigma) * now.R / next.pi - 1.0);
    if (std::fabs(now.R - 1.0) > 1e-12) {
        const double ratio = utility_m(now.m, p) / utility_c(now.c, p);
        d.money = std::fabs(ratio * now.R / (now.R - 1.0) - 1.0);
    }
    d.labor = std::fabs((-utility_n(now.n, p) / utility_c(now.c, p)) / now.w - 1.0);
    return d;
}

Deviation deviation_from(std::span<const double> samples, double reference) {
    if (samples.empty()) throw std::domain_error("deviation_from: empty sample set");
    if (reference == 0.0) throw std::domain_error("deviation_from: zero reference value");
    double acc = 0.0, acc_abs = 0.0;
    for (double x : samples) {
        const double pct = (x - reference) / reference * 100.0;
        acc += pct;
        acc_abs += std::fabs(pct);
    }
    const double n = static_cast<double>(samples.size());
    return {acc / n, acc_abs / n};
}

SsDistances ss_distances(std::span<const double> pi_samples,
                         std::span<const double> b_samples,
                         std::span<const double> n_samples,
                         std::span<const double> m_samples,
                         std::span<const double> u_samples,
                         const SteadyState& ss,
                         PiConvention convention) {
    SsDistances out{};
    if (convention == PiConvention::Net) {
        std::vector<double> net(pi_samples.begin(), pi_samples.end());
        for (double& x : net) x -= 1.0;
        out.pi = deviation_from(net, ss.pi - 1.0);
    } else {
        out.pi = deviation_from(pi_samples, ss.pi);
    }
    out.b = deviation_from(b_samples, ss.b);
    out.n = deviation_from(n_samples, ss.n);
    out.m = deviation_from(m_samples, ss.m);
    out.u = deviation_from(u_samples, ss.u);
    return out;
}

LearningCurve learning_curve(std::span<const double> series, int window) {
    if (window < 1) throw std::domain_error("learning_curve: window must be positive");
    if (series.size() < static_cast<std::size_t>(window)) {
        throw std::domain_error("learning_curve: series shorter than the window");
    }
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(series.size());
    const std::ptrdiff_t half = window / 2;
    LearningCurve lc;
    lc.smoothed.resize(n);
    lc.lower.resize(n);
    lc.upper.resize(n);
    lc.normalized.resize(n);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        double mean = 0.0;
        for (std::ptrdiff_t k = lo; k <= hi; ++k) mean += series[k];
        const double cnt = static_cast<double>(hi - lo + 1);
        mean /= cnt;
        double var = 0.0;
        for (std::ptrdiff_t k = lo; k <= hi; ++k) {
            var += (series[k] - mean) * (series[k] - mean);
        }
        var /= cnt;
        const double sd = std::sqrt(var);
        lc.smoothed[i] = mean;
        lc.lower[i] = mean - 2.0 * sd;
        lc.upper[i] = mean + 2.0 * sd;
    }
    const double peak = *std::max_element(lc.smoothed.begin(), lc.smoothed.end());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        lc.normalized[i] = (peak != 0.0) ? lc.smoothed[i] / peak : 0.0;
    }
    return lc;
}

} // namespace mflab
