#include "mflab/adaptive.hpp"
#include "mflab/errors.hpp"
#include "mflab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mflab {

double gain_schedule(long t, GainKind kind, double kappa) {
    if (t < 1) throw std::domain_error("gain_schedule: t must be >= 1");
    if (kind == GainKind::Decreasing) return 1.0 / static_cast<double>(t);
    return kappa;
}

Beliefs update_beliefs(const Beliefs& bel, double pi_obs, double b_obs, double gain) {
    if (!(gain > 0.0 && gain <= 1.0)) throw std::domain_error("update_beliefs: gain must lie in (0,1]");
    Beliefs out = bel;
    out.pi_e += gain * (pi_obs - bel.pi_e);
    out.b_e += gain * (b_obs - bel.b_e);
    return out;
}

TempEq temporary_equilibrium(const Beliefs& bel, const PrevState& prev, const Shocks& shocks,
                             const ModelParams& p) {
    TempEq eq;
    eq.c = output_given_shock(shocks.eps_y, p);
    eq.R = (bel.pi_e / p.beta) * std::pow(bel.c_e / eq.c, p.sigma);
    if (!(eq.R > 1.0)) {
        throw NumericalError("temporary_equilibrium: beliefs imply R <= 1, Taylor rule not invertible");
    }
    eq.pi = taylor_inverse(eq.R - 1.0, shocks.eps_R, p);
    if (!(eq.pi > p.beta)) {
        throw std::domain_error("temporary_equilibrium: implied inflation at or below beta");
    }
    eq.m = money_demand(eq.c, eq.R, p);
    eq.tau = fiscal_tax(prev.b, shocks.eps_tau, p);
    eq.b = prev.m / eq.pi + prev.R * prev.b / eq.pi - eq.m - eq.tau;
    return eq;
}

ALTrajectory simulate_al(const ALConfig& cfg, const Beliefs& bel0) {
    if (cfg.horizon < 1) throw std::domain_error("simulate_al: horizon must be >= 1");
    const SteadyState& ss = cfg.anchor;

    ALTrajectory out;
    out.series.reserve(static_cast<std::size_t>(cfg.horizon));

    Beliefs bel = bel0;
    PrevState prev{ss.m, ss.b, ss.R};
    double pi_lag = ss.pi;
    double b_lag = ss.b;

    const double init_dist = std::fabs(bel0.pi_e - ss.pi) + std::fabs(bel0.b_e - ss.b) / std::max(ss.b, 1.0);
    const double blowup = 10.0 * std::max(init_dist, 1e-8);

    auto rng = make_rng(cfg.seed, 0x41); // only consumed when shocks are on

    for (long t = 1; t <= cfg.horizon; ++t) {
        const Shocks sh = draw_shocks(rng, cfg.params, cfg.shocks);
        TempEq eq;
        try {
            eq = temporary_equilibrium(bel, prev, sh, cfg.params);
        } catch (const std::exception& e) {
            out.diverged = true;
            out.stop_t = t;
            out.stop_reason = "infeasible at t=" + std::to_string(t) + ": " + e.what();
            break;
        }

        const double g = gain_schedule(t, cfg.gain, cfg.kappa);
        bel = update_beliefs(bel, pi_lag, b_lag, g);

        out.series.push_back({t, eq.pi, eq.b, eq.R, eq.c, eq.m, eq.tau, bel.pi_e, bel.b_e, g});
        out.stop_t = t;

        pi_lag = eq.pi;
        b_lag = eq.b;
        prev = PrevState{eq.m, eq.b, eq.R};

        const double dist = std::fabs(bel.pi_e - ss.pi) + std::fabs(bel.b_e - ss.b) / std::max(ss.b, 1.0);
        if (!std::isfinite(dist) || !std::isfinite(eq.b)) {
            out.diverged = true;
            out.stop_reason = "non-finite trajectory at t=" + std::to_string(t);
            break;
        }
        if (dist > blowup) {
            out.diverged = true;
            out.stop_reason = "belief distance exceeded 10x initial at t=" + std::to_string(t);
            break;
        }
    }

    if (!out.series.empty()) {
        const std::size_t n = out.series.size();
        const std::size_t start = n - n / 10 - 1;
        double acc_pi = 0.0, acc_b = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = start; i < n; ++i) {
            acc_pi += std::fabs(out.series[i].pi_e - ss.pi);
            acc_b += std::fabs(out.series[i].b_e - ss.b);
            ++cnt;
        }
        const double tol = cfg.shocks ? 1e-3 : 1e-4;
        const bool conv = !out.diverged && out.stop_t == cfg.horizon &&
                          acc_pi / cnt < tol && acc_b / cnt < tol * ss.b;
        out.converged = conv;
        if (conv) out.limit = cfg.high_branch ? ALLimit::High : ALLimit::Low;
    }
    return out;
}

} // namespace mflab
