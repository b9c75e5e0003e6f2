#include "mflab/stability.hpp"
#include "mflab/errors.hpp"

#include <cmath>

namespace mflab {

namespace {
constexpr double kBoundaryTol = 1e-12;
} // namespace

LinearSystem linearize(const SteadyState& ss, const ModelParams& p) {
    const TaylorParts tp = taylor_components(ss.pi, p);
    const double alpha = tp.f_prime;
    const double delta = tp.f;
    const double pi = ss.pi;
    const double R = ss.R;
    const double m = ss.m;
    const double b = ss.b;
    const double c = ss.c;
    const double xi = (p.sigma * (1.0 - p.eta) + p.eta + p.phi) / ((1.0 + p.phi) * c);
    const double md_slope = m / (p.sigma * R * (R - 1.0)); // money-demand response to the rate

    Eigen::Matrix2d lhs;
    lhs << b * alpha / pi - alpha * md_slope / pi, 1.0 / p.beta - p.gamma,
           alpha, 0.0;

    Eigen::Matrix2d rhs;
    rhs << (m + pi * b / p.beta) / (pi * pi) - alpha * md_slope, 1.0,
           1.0 / p.beta, 0.0;

    Eigen::Matrix<double, 2, 3> shk;
    shk << delta * md_slope / pi - b * delta / pi, 0.0, -m / (pi * c * xi),
           -delta, 0.0, -p.sigma * pi / (p.beta * c * xi);

    const double det = lhs(0, 0) * lhs(1, 1) - lhs(0, 1) * lhs(1, 0);
    if (std::fabs(det) < 1e-300) {
        throw NumericalError("linearize: singular left-hand coefficient block");
    }
    Eigen::Matrix2d inv;
    inv << lhs(1, 1) / det, -lhs(0, 1) / det,
           -lhs(1, 0) / det, lhs(0, 0) / det;

    LinearSystem sys;
    sys.B = inv * rhs;
    sys.C = inv * shk;
    return sys;
}

std::pair<double, double> bk_eigenvalues(const SteadyState& ss, const ModelParams& p) {
    const double alpha = taylor_components(ss.pi, p).f_prime;
    if (std::fabs(alpha) < kBoundaryTol) {
        throw NumericalError("bk_eigenvalues: f'(pi) vanishes");
    }
    const double denom = 1.0 / p.beta - p.gamma;
    if (std::fabs(denom) < kBoundaryTol) {
        throw NumericalError("bk_eigenvalues: singular configuration, gamma == 1/beta");
    }
    return {1.0 / (alpha * p.beta), 1.0 / denom};
}

Determinacy classify_determinacy(std::pair<double, double> eigs) {
    const double a1 = std::fabs(eigs.first);
    const double a2 = std::fabs(eigs.second);
    if (std::fabs(a1 - 1.0) < kBoundaryTol || std::fabs(a2 - 1.0) < kBoundaryTol) {
        throw NumericalError("classify_determinacy: eigenvalue on the unit circle");
    }
    const bool in1 = a1 < 1.0;
    const bool in2 = a2 < 1.0;
    if (in1 != in2) return Determinacy::Determinate;
    if (in1 && in2) return Determinacy::Explosive;
    return Determinacy::Indeterminate;
}

EStability e_stability(const SteadyState& ss, const ModelParams& p, const RegimeLabel& regime) {
    const auto eigs = bk_eigenvalues(ss, p);
    EStability out;
    out.ev1 = eigs.first - 1.0;
    out.ev2 = eigs.second - 1.0;
    // branch identification: beta f'(pi) > 1 at the target root, < 1 at the
    // liquidity-trap root
    const bool high_branch = out.ev1 < 0.0;
    const bool passive_fiscal = regime.fiscal == FiscalStance::Passive;
    out.stable = (passive_fiscal && high_branch) || (!passive_fiscal && !high_branch);
    return out;
}

StabilityVerdict classify_point(double gamma, double pi, ModelParams p) {
    p.gamma = gamma;
    const SteadyState ss = compute_steady_state(pi, p);
    const RegimeLabel regime = classify_policy(p, ss);
    StabilityVerdict v;
    v.eig_bk = bk_eigenvalues(ss, p);
    v.determinacy = classify_determinacy(v.eig_bk);
    const EStability e = e_stability(ss, p, regime);
    v.eig_e = {e.ev1, e.ev2};
    v.e_stable = e.stable;
    return v;
}

std::vector<RegimeCell> regime_map(std::span<const double> gamma_grid,
                                   std::span<const double> pi_grid,
                                   const ModelParams& p) {
    std::vector<RegimeCell> cells;
    cells.reserve(gamma_grid.size() * pi_grid.size());
    for (double g : gamma_grid) {
        for (double pi : pi_grid) {
            RegimeCell cell;
            cell.gamma = g;
            cell.pi = pi;
            ModelParams q = p;
            q.gamma = g;
            cell.high_branch = p.beta * taylor_components(pi, q).f_prime > 1.0;
            try {
                cell.verdict = classify_point(g, pi, p);
            } catch (const NumericalError&) {
                cell.boundary = true; // knife-edge gamma or unit-circle eigenvalue
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

std::string to_string(Determinacy d) {
    switch (d) {
        case Determinacy::Determinate: return "determinate";
        case Determinacy::Indeterminate: return "indeterminate";
        case Determinacy::Explosive: return "explosive";
    }
    return "unknown";
}

} // namespace mflab
