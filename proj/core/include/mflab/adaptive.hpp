#pragma once
#include "mflab/environment.hpp"
#include "mflab/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mflab {

/// Point expectations under steady-state learning. c_e stays fixed at the
/// non-stochastic steady output: output is exogenous i.i.d., so only the
/// means of inflation and bonds are estimated.
struct Beliefs {
    double pi_e;
    double b_e;
    double c_e;
};

enum class GainKind { Decreasing, Constant };

/// Decreasing gain is 1/t; constant gain returns kappa.
double gain_schedule(long t, GainKind kind, double kappa = 0.05);

/// One recursive mean update x_e <- x_e + gain (obs - x_e) for pi and b.
Beliefs update_beliefs(const Beliefs& bel, double pi_obs, double b_obs, double gain);

/// Lagged realized quantities entering the temporary equilibrium.
struct PrevState {
    double m;
    double b;
    double R;
};

struct TempEq {
    double pi;
    double b;
    double R;
    double c;
    double m;
    double tau;
};

/// Market outcome of one period given beliefs: consumption from the
/// exogenous-output equation, the rate from the point-expectation Euler
/// condition, inflation by Taylor-rule inversion, money from money demand,
/// taxes from the fiscal rule and bonds from the realized budget constraint.
/// Throws NumericalError when beliefs imply R <= 1 (rule not invertible) and
/// std::domain_error when the implied inflation falls to beta or below.
TempEq temporary_equilibrium(const Beliefs& bel, const PrevState& prev, const Shocks& shocks,
                             const ModelParams& p);

struct ALPoint {
    long t;
    double pi, b, R, c, m, tau;
    double pi_e, b_e;
    double gain;
};

enum class ALLimit { High, Low, None };

struct ALTrajectory {
    std::vector<ALPoint> series;
    bool converged = false;
    bool diverged = false;
    ALLimit limit = ALLimit::None;
    long stop_t = 0;              ///< last simulated period
    std::string stop_reason;      ///< set when the run ends early
};

struct ALConfig {
    ModelParams params;
    SteadyState anchor;      ///< steady state the run is evaluated against
    bool high_branch = true; ///< which root the anchor is
    GainKind gain = GainKind::Decreasing;
    double kappa = 0.05;     ///< constant-gain value when used
    long horizon = 50000;
    bool shocks = false;
    std::uint64_t seed = 0;
};

/// Iterates the temporary equilibrium and the belief recursion from bel0,
/// with lagged observations entering the update. The run counts as converged
/// when the last-decile mean belief distances fall below 1e-4 (1e-3 with
/// shocks on, relative for bonds); it is labeled divergent when the belief
/// distance exceeds ten times its initial value or the equilibrium becomes
/// infeasible.
ALTrajectory simulate_al(const ALConfig& cfg, const Beliefs& bel0);

} // namespace mflab
