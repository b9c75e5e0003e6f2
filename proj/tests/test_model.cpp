#include "mflab/errors.hpp"
#include "mflab/model.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace mflab;

namespace {

ModelParams table1() {
    ModelParams p;
    p.gamma0 = -0.0566;
    p.gamma = 0.02;
    return p;
}

// independent scalar bisection on a monotone-crossing function
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14) {
    REQUIRE(f(lo) * f(hi) < 0.0);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (f(lo) * f(mid) <= 0.0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("utility closed forms") {
    ModelParams p = table1();
    CHECK(utility(1.0, 1.0, 1.0, p) == doctest::Approx(-1.05).epsilon(1e-12));
    CHECK(std::fabs(utility(1.0, 1.7157, 1.0, p) - (-1.0170)) <= 5e-4);
    CHECK(std::fabs(utility(1.0, 2.0614, 1.0, p) - (-1.0118)) <= 5e-4);
    CHECK_THROWS_AS(utility(0.0, 1.0, 1.0, p), std::domain_error);
    CHECK_THROWS_AS(utility(1.0, -1.0, 1.0, p), std::domain_error);
    CHECK_THROWS_AS(utility(1.0, 1.0, 0.0, p), std::domain_error);
}

TEST_CASE("taylor components at the target and below") {
    ModelParams p = table1();
    const TaylorParts at_target = taylor_components(p.pi_star, p);
    CHECK(at_target.f == doctest::Approx(p.r_star() - 1.0).epsilon(1e-12));
    CHECK(at_target.f_prime == doctest::Approx(p.A / p.beta).epsilon(1e-12));

    const InflationRoots roots = solve_steady_inflation(p);
    const TaylorParts at_low = taylor_components(roots.pi_low, p);
    CHECK(at_low.f_prime < 1.0 / p.beta);
    // closed-form derivative at pi_L equals the A/beta power form
    const double r_star = p.r_star();
    const double expo = ((p.A - 1.0) * r_star + 1.0) / (r_star - 1.0);
    CHECK(at_low.f_prime ==
          doctest::Approx((p.A / p.beta) * std::pow(roots.pi_low / p.pi_star, expo)).epsilon(1e-10));

    CHECK(taylor_components(1e-9, p).f <= 1e-30);

    // f nondecreasing on a sweep
    double prev = 0.0;
    for (double pi = 0.5; pi <= 1.5; pi += 0.01) {
        const double f = taylor_components(pi, p).f;
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("taylor rate") {
    ModelParams p = table1();
    CHECK(taylor_rate(p.pi_star, 1.0, p) == doctest::Approx(p.pi_star / p.beta).epsilon(1e-12));
    const InflationRoots roots = solve_steady_inflation(p);
    // at the solved low root the rule reproduces the Fisher relation
    CHECK(taylor_rate(roots.pi_low, 1.0, p) == doctest::Approx(roots.pi_low / p.beta).epsilon(1e-11));
    CHECK(taylor_rate(p.pi_star, 0.5, p) ==
          doctest::Approx(1.0 + 0.5 * (p.r_star() - 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(taylor_rate(p.pi_star, 0.0, p), std::domain_error);
}

TEST_CASE("taylor inverse undoes the rate schedule") {
    ModelParams p = table1();
    for (double pi : {1.0005, 1.0014, 1.005, 1.01, 1.02}) {
        const double f = taylor_components(pi, p).f;
        CHECK(taylor_inverse(f, 1.0, p) == doctest::Approx(pi).epsilon(1e-12));
    }
}

TEST_CASE("fiscal tax rule") {
    ModelParams p = table1();
    CHECK(std::fabs(fiscal_tax(4.0, 0.0, p) - 0.0234) <= 1e-12);
    CHECK(fiscal_tax(0.0, 0.0, p) == doctest::Approx(p.gamma0).epsilon(1e-15));
    ModelParams afp = p;
    afp.gamma = 0.0;
    afp.gamma0 = 0.0234;
    CHECK(fiscal_tax(4.0, 0.0, afp) == doctest::Approx(0.0234).epsilon(1e-15));
}

TEST_CASE("steady output against a bisection oracle") {
    ModelParams p = table1();
    const double y = steady_output(p);
    CHECK(std::fabs(y - 0.99975) <= 5e-6);

    // oracle: root of y^(sigma + (eta+phi)/(1-eta)) - (1-eta) on (0.5, 1.5)
    const double expo = p.sigma + (p.eta + p.phi) / (1.0 - p.eta);
    const double oracle = bisect([&](double x) { return std::pow(x, expo) - (1.0 - p.eta); }, 0.5, 1.5);
    CHECK(y == doctest::Approx(oracle).epsilon(1e-12));

    ModelParams flat = p;
    flat.eta = 0.0;
    CHECK(steady_output(flat) == doctest::Approx(1.0).epsilon(1e-15));

    ModelParams alt = p;
    alt.sigma = 1.0;
    alt.phi = 1.0;
    alt.eta = 0.5;
    const double expo_alt = alt.sigma + (alt.eta + alt.phi) / (1.0 - alt.eta);
    const double oracle_alt =
        bisect([&](double x) { return std::pow(x, expo_alt) - (1.0 - alt.eta); }, 0.1, 1.5);
    CHECK(steady_output(alt) == doctest::Approx(oracle_alt).epsilon(1e-12));
    CHECK(steady_output(alt) == doctest::Approx(std::pow(0.5, 0.25)).epsilon(1e-12));
}

TEST_CASE("steady inflation roots") {
    ModelParams p = table1();
    const InflationRoots roots = solve_steady_inflation(p);
    CHECK(roots.pi_high == p.pi_star);
    CHECK(std::fabs(roots.pi_low - 1.0014) <= 5e-5);
    CHECK(roots.pi_low > p.beta);
    CHECK(roots.pi_low < p.pi_star);

    auto residual = [&p](double pi) {
        return pi / p.beta - 1.0 - taylor_components(pi, p).f;
    };
    CHECK(std::fabs(residual(roots.pi_high)) <= 1e-12);
    CHECK(std::fabs(residual(roots.pi_low)) <= 1e-12);

    ModelParams alt = p;
    alt.A = 1.5;
    alt.pi_star = 1.02;
    const InflationRoots alt_roots = solve_steady_inflation(alt);
    auto alt_res = [&alt](double pi) {
        return pi / alt.beta - 1.0 - taylor_components(pi, alt).f;
    };
    const double oracle = bisect(alt_res, alt.beta + 1e-9, alt.pi_star - 1e-9);
    CHECK(alt_roots.pi_low == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::fabs(alt_res(alt_roots.pi_low)) <= 1e-12);
    CHECK(std::fabs(alt_res(alt_roots.pi_high)) <= 1e-12);
}

TEST_CASE("steady state at both roots") {
    ModelParams p = table1();
    const InflationRoots roots = solve_steady_inflation(p);

    SUBCASE("target root, passive fiscal calibration") {
        const SteadyState ss = compute_steady_state(roots.pi_high, p);
        CHECK(ss.R == doctest::Approx(ss.pi / p.beta).epsilon(1e-15));
        CHECK(std::fabs(ss.m - 1.7157) <= 5e-4);
        CHECK(std::fabs(ss.b - 4.0) <= 5e-3);
        CHECK(std::fabs(ss.u - (-1.0170)) <= 5e-4);
    }

    SUBCASE("liquidity-trap root") {
        ModelParams q = p;
        q.gamma0 = -0.0426;
        const SteadyState ss = compute_steady_state(roots.pi_low, q);
        CHECK(ss.m > 2.061 - 2e-3);
        CHECK(ss.m < 2.064 + 2e-3);
        CHECK(std::fabs(ss.b - 4.0) <= 1e-2);
    }

    SUBCASE("money-demand pole near beta") {
        const SteadyState near_pole = compute_steady_state(p.beta + 1e-9, p);
        CHECK(near_pole.m > 1e2);
        CHECK_THROWS_AS(compute_steady_state(p.beta, p), std::domain_error);
        CHECK_THROWS_AS(compute_steady_state(0.5, p), std::domain_error);
    }

    SUBCASE("singular fiscal configuration") {
        ModelParams q = p;
        q.gamma = 1.0 / q.beta - 1.0;
        CHECK_THROWS_AS(compute_steady_state(roots.pi_high, q), NumericalError);
    }
}

TEST_CASE("gamma0 calibration") {
    ModelParams p = table1();
    const InflationRoots roots = solve_steady_inflation(p);

    CHECK(std::fabs(calibrate_gamma0(p, roots.pi_high, 4.0) - (-0.0566)) <= 1e-4);

    ModelParams afp = p;
    afp.gamma = 0.0;
    CHECK(std::fabs(calibrate_gamma0(afp, roots.pi_low, 4.0) - 0.0375) <= 1e-3);

    // round trip reproduces the bond target
    for (bool high : {true, false}) {
        for (double gamma : {0.0, 0.02}) {
            ModelParams q = p;
            q.gamma = gamma;
            const double pi = high ? roots.pi_high : roots.pi_low;
            q.gamma0 = calibrate_gamma0(q, pi, 4.0);
            CHECK(std::fabs(compute_steady_state(pi, q).b - 4.0) <= 1e-10);
        }
    }
}

TEST_CASE("policy classification") {
    ModelParams p = table1();
    const InflationRoots roots = solve_steady_inflation(p);
    const SteadyState high = compute_steady_state(roots.pi_high, p);
    const SteadyState low = compute_steady_state(roots.pi_low, p);

    const RegimeLabel amp_pfp = classify_policy(p, high);
    CHECK(amp_pfp.monetary == MonetaryStance::Active);
    CHECK(amp_pfp.fiscal == FiscalStance::Passive);

    ModelParams afp = p;
    afp.gamma = 0.0;
    const RegimeLabel pmp_afp = classify_policy(afp, low);
    CHECK(pmp_afp.monetary == MonetaryStance::Passive);
    CHECK(pmp_afp.fiscal == FiscalStance::Active);

    const RegimeLabel pmp_pfp = classify_policy(p, low);
    CHECK(pmp_pfp.monetary == MonetaryStance::Passive);
    CHECK(pmp_pfp.fiscal == FiscalStance::Passive);

    ModelParams knife = p;
    knife.gamma = 1.0 / knife.beta - 1.0;
    CHECK_THROWS_AS(classify_policy(knife, high), NumericalError);
}

TEST_CASE("steady-state identities hold across random calibrations") {
    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> u_beta(0.95, 0.998);
    std::uniform_real_distribution<double> u_A(1.05, 2.0);
    std::uniform_real_distribution<double> u_pi(1.002, 1.05);
    std::uniform_real_distribution<double> u_sigma(1.5, 4.0);
    std::uniform_real_distribution<double> u_eta(0.0, 0.2);
    std::uniform_real_distribution<double> u_gamma01(0.0, 1.0);

    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        ModelParams p;
        p.beta = u_beta(rng);
        p.A = u_A(rng);
        p.pi_star = u_pi(rng);
        p.sigma = u_sigma(rng);
        p.eta = u_eta(rng);
        const double knife = 1.0 / p.beta - 1.0;
        p.gamma = u_gamma01(rng) * 2.0 * knife; // spans active and passive
        if (std::fabs(p.gamma - knife) < 1e-6) continue;

        InflationRoots roots;
        try {
            roots = solve_steady_inflation(p);
        } catch (const ConfigError&) {
            continue; // no interior low root for this draw
        }
        for (double pi : {roots.pi_high, roots.pi_low}) {
            p.gamma0 = calibrate_gamma0(p, pi, 4.0);
            const SteadyState ss = compute_steady_state(pi, p);
            // Fisher consistency
            CHECK(std::fabs(ss.R - ss.pi / p.beta) <= 1e-12);
            // the two money-demand forms agree
            const double md = money_demand(ss.c, ss.R, p);
            CHECK(std::fabs(md - ss.m) <= 1e-12 * std::max(1.0, ss.m));
            // the budget constraint closes at the steady state
            const double gbc = ss.m + ss.b + fiscal_tax(ss.b, 0.0, p) - ss.m / ss.pi - ss.R * ss.b / ss.pi;
            CHECK(std::fabs(gbc) <= 1e-10);
            // round trip of the calibration
            CHECK(std::fabs(ss.b - 4.0) <= 1e-10);
        }
        // slope ordering of the rate rule at the two roots
        CHECK(taylor_components(roots.pi_high, p).f_prime > 1.0 / p.beta);
        CHECK(taylor_components(roots.pi_low, p).f_prime < 1.0 / p.beta);
        ++checked;
    }
    CHECK(checked > 300);
}

TEST_CASE("parameter validation") {
    ModelParams p = table1();
    CHECK_NOTHROW(p.validate());
    ModelParams bad = p;
    bad.A = 0.9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = p;
    bad.beta = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = p;
    bad.gamma = 1.2 / bad.beta;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
