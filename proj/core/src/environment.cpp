#include "mflab/environment.hpp"
#include "mflab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mflab {

namespace {

constexpr double kFeasibilityFloor = 1e-6;

double clamp(double v, const Interval& iv) {
    return std::min(std::max(v, iv.lo), iv.hi);
}

void check_interval(const Interval& iv, const char* name) {
    if (!(iv.lo <= iv.hi)) {
        throw ConfigError(std::string("Environment: invalid bounds for ") + name);
    }
}

} // namespace

Shocks draw_shocks(std::mt19937_64& rng, const ModelParams& p, bool enabled) {
    if (!enabled) return Shocks{0.0, 1.0, 1.0};
    Shocks s;
    std::normal_distribution<double> n_tau(0.0, p.sd_tau);
    s.eps_tau = n_tau(rng);
    // log-normal with mean one and std sd_R: sig2 = ln(1 + sd^2), mu = -sig2/2
    if (p.sd_R > 0.0) {
        const double sig2 = std::log(1.0 + p.sd_R * p.sd_R);
        std::normal_distribution<double> n_r(-0.5 * sig2, std::sqrt(sig2));
        s.eps_R = std::exp(n_r(rng));
    } else {
        s.eps_R = 1.0;
    }
    std::normal_distribution<double> n_y(1.0, p.sd_y);
    do {
        s.eps_y = n_y(rng);
    } while (!(s.eps_y > 0.0));
    return s;
}

bool is_terminal(double u_prev, double u_curr, long steps_in_episode, const TerminationRule& rule) {
    if (steps_in_episode >= rule.n_epi_max) return true;
    return std::fabs(u_curr - u_prev) < rule.d_u_min;
}

Action steady_actions(const SteadyState& ss) {
    return Action{ss.pi * ss.y, ss.pi * ss.b, ss.n};
}

Environment::Environment(const ModelParams& p, ActionBounds action_bounds, StateBounds init_box,
                         bool shocks_enabled, std::uint64_t seed)
    : params_(p), action_bounds_(action_bounds), init_box_(init_box),
      shocks_on_(shocks_enabled), rng_(seed) {
    params_.validate();
    check_interval(action_bounds_.c_act, "c_act");
    check_interval(action_bounds_.b_act, "b_act");
    check_interval(action_bounds_.n, "n");
    check_interval(init_box_.m, "initial m");
    check_interval(init_box_.b, "initial b");
    check_interval(init_box_.c, "initial c");
    check_interval(init_box_.pi, "initial pi");
    check_interval(init_box_.n, "initial n");
}

EnvState Environment::reset() {
    auto draw = [this](const Interval& iv) {
        if (iv.hi == iv.lo) return iv.lo;
        std::uniform_real_distribution<double> u(iv.lo, iv.hi);
        return u(rng_);
    };
    state_.m_prev = draw(init_box_.m);
    state_.b_prev = draw(init_box_.b);
    state_.pi_prev = draw(init_box_.pi);
    state_.c_prev = draw(init_box_.c);
    state_.n_prev = draw(init_box_.n);
    r_prev_ = taylor_rate(state_.pi_prev, 1.0, params_);
    state_.shocks = draw_shocks(rng_, params_, shocks_on_);
    return state_;
}

void Environment::set_state(const EnvState& s, double r_prev) {
    state_ = s;
    r_prev_ = r_prev;
}

StepResult Environment::step(const Action& a_raw) {
    Action a;
    a.c_act = clamp(a_raw.c_act, action_bounds_.c_act);
    a.b_act = clamp(a_raw.b_act, action_bounds_.b_act);
    a.n = clamp(a_raw.n, action_bounds_.n);

    const Shocks& sh = state_.shocks;

    StepInfo info;
    info.n = a.n;
    info.y = sh.eps_y * std::pow(a.n, 1.0 - params_.eta);
    info.w = (1.0 - params_.eta) * sh.eps_y * std::pow(a.n, -params_.eta);
    info.pi = a.c_act / info.y;
    info.c = info.y; // goods market clears identically
    info.b = a.b_act / info.pi;
    info.R = taylor_rate(info.pi, sh.eps_R, params_);
    info.tau = fiscal_tax(state_.b_prev, sh.eps_tau, params_);
    info.m = state_.m_prev / info.pi + r_prev_ * state_.b_prev / info.pi - info.b - info.tau;

    StepResult res;
    res.done = false;
    if (!(info.m > 0.0) || !(info.c > 0.0)) {
        // infeasible fiscal/portfolio path: bounded penalty, episode over
        res.done = true;
        info.u = utility(std::max(info.c, kFeasibilityFloor),
                         std::max(info.m, kFeasibilityFloor), a.n, params_);
    } else {
        info.u = utility(info.c, info.m, a.n, params_);
    }
    res.reward = info.u;
    res.info = info;

    EnvState next;
    next.m_prev = info.m;
    next.b_prev = info.b;
    next.pi_prev = info.pi;
    next.c_prev = info.c;
    next.n_prev = a.n;
    next.shocks = draw_shocks(rng_, params_, shocks_on_);
    res.next_state = next;

    state_ = next;
    r_prev_ = info.R;
    return res;
}

} // namespace mflab
