#pragma once
#include <utility>

namespace mflab {

/// Structural calibration of the economy. Defaults follow the baseline
/// quarterly parameterisation; all rates are gross quarterly rates.
struct ModelParams {
    double beta = 0.99;     ///< discount factor
    double sigma = 3.0;     ///< inverse intertemporal elasticity
    double eta = 0.001;     ///< production curvature
    double phi = 1.0;       ///< inverse Frisch elasticity
    double chi = 0.1;       ///< money preference weight
    double gamma0 = -0.0566; ///< fiscal rule intercept
    double gamma = 0.02;    ///< fiscal feedback on lagged bonds
    double A = 1.3;         ///< Taylor rule coefficient
    double pi_star = 1.01;  ///< gross inflation target
    double sd_tau = 0.0005; ///< fiscal shock std. dev.
    double sd_R = 0.0005;   ///< rate shock std. dev.
    double sd_y = 0.0005;   ///< technology shock std. dev.

    /// Throws ConfigError if any structural invariant is violated
    /// (beta in (0,1), sigma > 0, eta in [0,1), phi > 0, chi > 0,
    /// A > 1, pi_star > 1, gamma in [0, 1/beta]).
    void validate() const;

    double r_star() const { return pi_star / beta; } ///< gross target rate
};

/// Full steady-state tuple for one inflation root. c and y coincide by
/// goods-market clearing; n is pinned by the production function.
struct SteadyState {
    double pi; ///< gross inflation
    double R;  ///< gross nominal rate, pi/beta
    double y;
    double c;
    double n;
    double m;  ///< real money balances
    double b;  ///< real bonds
    double w;  ///< real wage
    double u;  ///< per-period utility at the steady state
};

enum class MonetaryStance { Active, Passive };
enum class FiscalStance { Active, Passive };

struct RegimeLabel {
    MonetaryStance monetary;
    FiscalStance fiscal;
};

struct TaylorParts {
    double f;       ///< f(pi), the net-rate schedule
    double f_prime; ///< analytic derivative f'(pi)
};

struct InflationRoots {
    double pi_high; ///< the target root, equal to pi_star by construction
    double pi_low;  ///< the liquidity-trap root in (beta, pi_star)
};

/// Separable period utility c^{1-s}/(1-s) + chi m^{1-s}/(1-s) - n^{1+p}/(1+p).
/// Throws std::domain_error unless all of c, m, n are strictly positive.
double utility(double c, double m, double n, const ModelParams& p);

/// Marginal utilities of the separable form, same domain requirements.
double utility_c(double c, const ModelParams& p);
double utility_m(double m, const ModelParams& p);
double utility_n(double n, const ModelParams& p);

/// Interest-rate schedule f(pi) = (R*-1)(pi/pi*)^{A R*/(R*-1)} and its
/// derivative. Requires pi > 0.
TaylorParts taylor_components(double pi, const ModelParams& p);

/// Gross policy rate R = 1 + eps_R * f(pi). Requires eps_R > 0.
double taylor_rate(double pi, double eps_R, const ModelParams& p);

/// Closed-form inverse of the rate schedule: the pi with f(pi) = net_rate / eps_R.
/// Requires net_rate > 0.
double taylor_inverse(double net_rate, double eps_R, const ModelParams& p);

/// Linear tax rule tau = gamma0 + gamma * b_prev + eps_tau.
double fiscal_tax(double b_prev, double eps_tau, const ModelParams& p);

/// Real money demand chi^{1/sigma} c ((R-1)/R)^{-1/sigma}. Requires R > 1.
double money_demand(double c, double R, const ModelParams& p);

/// Output with a unit technology shock: the y solving
/// y^{sigma + (eta+phi)/(1-eta)} = 1 - eta.
double steady_output(const ModelParams& p);

/// Output for realized technology shock eps_y (the exogenous-output equation).
double output_given_shock(double eps_y, const ModelParams& p);

/// Both steady-state inflation roots. pi_high = pi_star exactly; pi_low is
/// found by bisection on (beta+1e-9, pi_star-1e-9) down to width 1e-14.
/// Throws ConfigError if the bracket carries no sign change.
InflationRoots solve_steady_inflation(const ModelParams& p);

/// Assembles the full steady state at a given inflation root.
/// Throws std::domain_error for pi <= beta (money demand undefined) and
/// NumericalError when 1/beta - 1 - gamma == 0 (singular fiscal block).
SteadyState compute_steady_state(double pi, const ModelParams& p);

/// The gamma0 making compute_steady_state(pi, .).b equal to b_target,
/// by closed-form inversion of the steady-state bond equation.
double calibrate_gamma0(const ModelParams& p, double pi, double b_target);

/// Active/passive labels per the policy definitions. Throws NumericalError
/// when gamma sits on the knife edge 1/beta - 1 (within 1e-12).
RegimeLabel classify_policy(const ModelParams& p, const SteadyState& ss);

} // namespace mflab
