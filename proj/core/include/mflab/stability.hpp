#pragma once
#include "mflab/model.hpp"

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mflab {

/// First-order approximation around a steady state, with expectations on
/// the right-hand side: [pi_t, b_t]' = B E_t[pi_{t+1}, b_{t+1}]' + C shocks.
struct LinearSystem {
    Eigen::Matrix2d B;
    Eigen::Matrix<double, 2, 3> C; ///< loads (eps_R, eps_tau, eps_y) deviations
};

enum class Determinacy { Determinate, Indeterminate, Explosive };

struct EStability {
    double ev1;  ///< 1/(beta f'(pi)) - 1
    double ev2;  ///< 1/(1/beta - gamma) - 1
    bool stable; ///< learnability flag for this (branch, fiscal stance) cell
};

struct StabilityVerdict {
    Determinacy determinacy;
    bool e_stable;
    std::pair<double, double> eig_bk; ///< eigenvalues of B
    std::pair<double, double> eig_e;  ///< eigenvalues of B - I
};

/// One evaluated cell of the regime map. Cells on a classification boundary
/// carry no verdict and are flagged instead.
struct RegimeCell {
    double gamma;
    double pi;
    bool high_branch; ///< true when beta f'(pi) > 1
    bool boundary = false;
    std::optional<StabilityVerdict> verdict;
};

/// Builds B and C from the explicit coefficient blocks of the linearized
/// system via closed-form 2x2 inversion. Throws NumericalError when the
/// left-hand block is singular.
LinearSystem linearize(const SteadyState& ss, const ModelParams& p);

/// Analytic eigenvalues (1/(alpha beta), 1/(1/beta - gamma)) with
/// alpha = f'(ss.pi). Throws NumericalError when 1/beta == gamma.
std::pair<double, double> bk_eigenvalues(const SteadyState& ss, const ModelParams& p);

/// Classification for the expectations-on-the-right system: one eigenvalue
/// inside and one outside the unit circle is determinate, both inside is
/// explosive, both outside is indeterminate. Eigenvalues within 1e-12 of
/// the unit circle raise NumericalError.
Determinacy classify_determinacy(std::pair<double, double> eigs);

/// E-stability eigenvalues and the learnability flag: the high-inflation
/// branch is stable under passive fiscal policy, the low branch under
/// active fiscal policy.
EStability e_stability(const SteadyState& ss, const ModelParams& p, const RegimeLabel& regime);

/// Convenience: full verdict at one (gamma, pi) point.
StabilityVerdict classify_point(double gamma, double pi, ModelParams p);

/// Evaluates classify_point over the grid product, flagging boundary cells.
std::vector<RegimeCell> regime_map(std::span<const double> gamma_grid,
                                   std::span<const double> pi_grid,
                                   const ModelParams& p);

std::string to_string(Determinacy d);

} // namespace mflab
