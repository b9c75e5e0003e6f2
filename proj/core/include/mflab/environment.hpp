#pragma once
#include "mflab/model.hpp"

#include <cstdint>
#include <random>

namespace mflab {

/// Exogenous disturbances for one period. eps_tau is additive (mean zero),
/// eps_R and eps_y are multiplicative (mean one, strictly positive).
struct Shocks {
    double eps_tau = 0.0;
    double eps_R = 1.0;
    double eps_y = 1.0;
};

/// The agent-visible observation: last period's real quantities plus the
/// current period's shock realisations.
struct EnvState {
    double m_prev;
    double b_prev;
    double pi_prev;
    double c_prev;
    double n_prev;
    Shocks shocks;
};

/// Household action triple. c_act and b_act are nominal choices deflated by
/// last period's price level; n is hours worked.
struct Action {
    double c_act;
    double b_act;
    double n;
};

/// Realized quantities of one transition. c equals y identically (markets
/// clear by construction); n is the executed hours choice.
struct StepInfo {
    double pi;
    double c;
    double b;
    double m;
    double R;
    double tau;
    double y;
    double w;
    double n;
    double u;
};

struct StepResult {
    double reward;
    EnvState next_state;
    bool done; ///< set only on infeasibility (m or c driven non-positive)
    StepInfo info;
};

struct Interval {
    double lo;
    double hi;
};

struct ActionBounds {
    Interval c_act;
    Interval b_act;
    Interval n;
};

/// Initial-state box episodes are drawn from.
struct StateBounds {
    Interval m;
    Interval b;
    Interval c;
    Interval pi;
    Interval n;
};

struct TerminationRule {
    double d_u_min = 1e-7;    ///< utility-improvement threshold
    long n_epi_max = 25000;   ///< hard cap on steps per episode
};

/// Mean-(0,1,1) shock draws: eps_tau ~ N(0, sd_tau), eps_R log-normal with
/// mean one and std sd_R, eps_y ~ N(1, sd_y) truncated to the positive axis.
/// Disabled shocks return (0,1,1) without consuming randomness.
Shocks draw_shocks(std::mt19937_64& rng, const ModelParams& p, bool enabled);

/// True iff |u_curr - u_prev| < rule.d_u_min or steps_in_episode >= rule.n_epi_max.
bool is_terminal(double u_prev, double u_curr, long steps_in_episode, const TerminationRule& rule);

/// The unique action triple that reproduces ss as a fixed point of step().
Action steady_actions(const SteadyState& ss);

/// Episodic model environment: owns its RNG and the hidden lagged policy
/// rate. Single-owner mutable; distinct instances may run concurrently.
class Environment {
public:
    Environment(const ModelParams& p, ActionBounds action_bounds, StateBounds init_box,
                bool shocks_enabled, std::uint64_t seed);

    /// Draws a fresh state uniformly from the initial box; the hidden lagged
    /// rate is initialized from the Taylor rule at the drawn inflation with a
    /// unit rate shock. Current-period shocks are drawn into the state.
    EnvState reset();

    /// Places the environment at an exact state (fixed-point checks, resuming
    /// a paused episode).
    void set_state(const EnvState& s, double r_prev);

    /// One transition of the economy under the given action (clamped to the
    /// action bounds first).
    StepResult step(const Action& a);

    const EnvState& state() const { return state_; }
    double r_prev() const { return r_prev_; }
    const ModelParams& params() const { return params_; }
    const ActionBounds& action_bounds() const { return action_bounds_; }
    const StateBounds& init_box() const { return init_box_; }
    bool shocks_enabled() const { return shocks_on_; }

private:
    ModelParams params_;
    ActionBounds action_bounds_;
    StateBounds init_box_;
    bool shocks_on_;
    std::mt19937_64 rng_;
    EnvState state_{};
    double r_prev_ = 1.0;
};

} // namespace mflab
