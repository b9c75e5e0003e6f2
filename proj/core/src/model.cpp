#include "mflab/model.hpp"
#include "mflab/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mflab {

namespace {
constexpr double kBoundaryTol = 1e-12;

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) {
        throw std::domain_error(std::string(name) + " must be strictly positive, got " + std::to_string(v));
    }
}
} // namespace

void ModelParams::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("ModelParams: " + msg); };
    if (!(beta > 0.0 && beta < 1.0)) fail("beta must lie in (0,1)");
    if (!(sigma > 0.0)) fail("sigma must be positive");
    if (!(eta >= 0.0 && eta < 1.0)) fail("eta must lie in [0,1)");
    if (!(phi > 0.0)) fail("phi must be positive");
    if (!(chi > 0.0)) fail("chi must be positive");
    if (!(A > 1.0)) fail("A must exceed 1");
    if (!(pi_star > 1.0)) fail("pi_star must exceed 1");
    if (!(gamma >= 0.0 && gamma <= 1.0 / beta)) fail("gamma must lie in [0, 1/beta]");
    if (!(sd_tau >= 0.0 && sd_R >= 0.0 && sd_y >= 0.0)) fail("shock std. deviations must be nonnegative");
}

double utility(double c, double m, double n, const ModelParams& p) {
    require_positive(c, "c");
    require_positive(m, "m");
    require_positive(n, "n");
    const double crra = 1.0 - p.sigma;
    const double curv = 1.0 + p.phi;
    return std::pow(c, crra) / crra + p.chi * std::pow(m, crra) / crra - std::pow(n, curv) / curv;
}

double utility_c(double c, const ModelParams& p) {
    require_positive(c, "c");
    return std::pow(c, -p.sigma);
}

double utility_m(double m, const ModelParams& p) {
    require_positive(m, "m");
    return p.chi * std::pow(m, -p.sigma);
}

double utility_n(double n, const ModelParams& p) {
    require_positive(n, "n");
    return -std::pow(n, p.phi);
}

TaylorParts taylor_components(double pi, const ModelParams& p) {
    require_positive(pi, "pi");
    const double r_star = p.r_star();
    const double expo = p.A * r_star / (r_star - 1.0);
    const double ratio = pi / p.pi_star;
    TaylorParts out;
    out.f = (r_star - 1.0) * std::pow(ratio, expo);
    // (R*-1) * expo / pi* simplifies to A/beta
    out.f_prime = (p.A / p.beta) * std::pow(ratio, expo - 1.0);
    return out;
}

double taylor_rate(double pi, double eps_R, const ModelParams& p) {
    require_positive(eps_R, "eps_R");
    return 1.0 + eps_R * taylor_components(pi, p).f;
}

double taylor_inverse(double net_rate, double eps_R, const ModelParams& p) {
    require_positive(net_rate, "net_rate");
    require_positive(eps_R, "eps_R");
    const double r_star = p.r_star();
    const double expo = (r_star - 1.0) / (p.A * r_star);
    return p.pi_star * std::pow(net_rate / ((r_star - 1.0) * eps_R), expo);
}

double fiscal_tax(double b_prev, double eps_tau, const ModelParams& p) {
    return p.gamma0 + p.gamma * b_prev + eps_tau;
}

double money_demand(double c, double R, const ModelParams& p) {
    require_positive(c, "c");
    if (!(R > 1.0)) throw std::domain_error("money_demand requires R > 1");
    return std::pow(p.chi, 1.0 / p.sigma) * c * std::pow((R - 1.0) / R, -1.0 / p.sigma);
}

double steady_output(const ModelParams& p) {
    return output_given_shock(1.0, p);
}

double output_given_shock(double eps_y, const ModelParams& p) {
    require_positive(eps_y, "eps_y");
    const double expo = p.sigma + (p.eta + p.phi) / (1.0 - p.eta);
    const double base = (1.0 - p.eta) * std::pow(eps_y, (1.0 + p.phi) / (1.0 - p.eta));
    return std::pow(base, 1.0 / expo);
}

InflationRoots solve_steady_inflation(const ModelParams& p) {
    p.validate();
    // g(pi) = pi/beta - 1 - f(pi); negative just above beta, positive just
    // below pi_star, with pi_low the unique crossing in between.
    auto g = [&p](double pi) { return pi / p.beta - 1.0 - taylor_components(pi, p).f; };
    double lo = p.beta + 1e-9;
    double hi = p.pi_star - 1e-9;
    if (!(g(lo) < 0.0 && g(hi) > 0.0)) {
        throw ConfigError("solve_steady_inflation: low root not bracketed in (beta, pi_star); "
                          "check A > 1 and pi_star > 1");
    }
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    InflationRoots roots;
    roots.pi_high = p.pi_star;
    roots.pi_low = 0.5 * (lo + hi);
    return roots;
}

SteadyState compute_steady_state(double pi, const ModelParams& p) {
    if (!(pi > p.beta)) {
        throw std::domain_error("compute_steady_state: pi must exceed beta for positive money demand");
    }
    const double denom = 1.0 / p.beta - 1.0 - p.gamma;
    if (std::fabs(denom) < kBoundaryTol) {
        throw NumericalError("compute_steady_state: singular fiscal configuration, gamma == 1/beta - 1");
    }
    SteadyState ss;
    ss.pi = pi;
    ss.R = pi / p.beta;
    ss.y = steady_output(p);
    ss.c = ss.y;
    ss.n = std::pow(ss.y, 1.0 / (1.0 - p.eta));
    ss.m = ss.y * std::pow((pi - p.beta) / (p.chi * pi), -1.0 / p.sigma);
    ss.b = (p.gamma0 + (1.0 - 1.0 / pi) * ss.m) / denom;
    ss.w = (1.0 - p.eta) * std::pow(ss.n, -p.eta);
    ss.u = utility(ss.c, ss.m, ss.n, p);
    return ss;
}

double calibrate_gamma0(const ModelParams& p, double pi, double b_target) {
    if (!(pi > p.beta)) {
        throw std::domain_error("calibrate_gamma0: pi must exceed beta");
    }
    const double denom = 1.0 / p.beta - 1.0 - p.gamma;
    if (std::fabs(denom) < kBoundaryTol) {
        throw NumericalError("calibrate_gamma0: singular fiscal configuration, gamma == 1/beta - 1");
    }
    const double m = steady_output(p) * std::pow((pi - p.beta) / (p.chi * pi), -1.0 / p.sigma);
    return b_target * denom - (1.0 - 1.0 / pi) * m;
}

RegimeLabel classify_policy(const ModelParams& p, const SteadyState& ss) {
    const double threshold = 1.0 / p.beta - 1.0;
    if (std::fabs(p.gamma - threshold) < kBoundaryTol) {
        throw NumericalError("classify_policy: gamma sits on the knife edge 1/beta - 1");
    }
    RegimeLabel label;
    label.fiscal = (p.gamma < threshold) ? FiscalStance::Active : FiscalStance::Passive;
    const double slope = taylor_components(ss.pi, p).f_prime;
    label.monetary = (slope > 1.0) ? MonetaryStance::Active : MonetaryStance::Passive;
    return label;
}

} // namespace mflab
