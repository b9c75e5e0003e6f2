#include "mflab/config.hpp"
#include "mflab/errors.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

namespace mflab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

long parse_long(const std::string& key, const std::string& v) {
    const double x = parse_double(key, v);
    const long l = static_cast<long>(x);
    if (static_cast<double>(l) != x) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
    return l;
}

bool parse_flag(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected on/off, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Regime parse_regime(const std::string& name) {
    if (name == "amp-pfp") return Regime::AmpPfp;
    if (name == "amp-afp") return Regime::AmpAfp;
    if (name == "pmp-pfp") return Regime::PmpPfp;
    if (name == "pmp-afp") return Regime::PmpAfp;
    throw ConfigError("unknown regime '" + name + "' (expected amp-pfp, amp-afp, pmp-pfp or pmp-afp)");
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::AmpPfp: return "amp-pfp";
        case Regime::AmpAfp: return "amp-afp";
        case Regime::PmpPfp: return "pmp-pfp";
        case Regime::PmpAfp: return "pmp-afp";
    }
    return "?";
}

bool regime_high_branch(Regime r) {
    return r == Regime::AmpPfp || r == Regime::AmpAfp;
}

bool regime_passive_fiscal(Regime r) {
    return r == Regime::AmpPfp || r == Regime::PmpPfp;
}

ExperimentConfig ExperimentConfig::defaults_for(Regime r) {
    ExperimentConfig cfg;
    cfg.regime = r;
    cfg.params.gamma = regime_passive_fiscal(r) ? 0.02 : 0.0;
    if (regime_high_branch(r)) {
        cfg.action_bounds = {{1.005, 1.015}, {4.000, 4.080}, {0.990, 1.010}};
        cfg.init_box = {{1.670, 1.750}, {3.960, 4.040}, {0.995, 1.005}, {1.005, 1.015}, {0.990, 1.010}};
    } else {
        cfg.action_bounds = {{1.000, 1.003}, {3.965, 4.045}, {0.990, 1.010}};
        cfg.init_box = {{2.010, 2.110}, {3.960, 4.040}, {0.997, 1.003}, {1.000, 1.003}, {0.990, 1.010}};
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path.string());
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    Regime regime = Regime::AmpPfp;
    for (const auto& [k, v] : entries) {
        if (k == "regime") regime = parse_regime(v);
    }
    ExperimentConfig cfg = defaults_for(regime);
    for (const auto& [k, v] : entries) {
        if (k == "regime") continue;
        cfg.apply(k, v);
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
    // Table-1 block
    if (key == "beta") params.beta = parse_double(key, value);
    else if (key == "sigma") params.sigma = parse_double(key, value);
    else if (key == "eta") params.eta = parse_double(key, value);
    else if (key == "phi") params.phi = parse_double(key, value);
    else if (key == "chi") params.chi = parse_double(key, value);
    else if (key == "gamma0") {
        if (value == "auto") {
            gamma0_auto = true;
        } else {
            params.gamma0 = parse_double(key, value);
            gamma0_auto = false;
        }
    } else if (key == "gamma") {
        params.gamma = parse_double(key, value);
        gamma_explicit = true;
    } else if (key == "A") params.A = parse_double(key, value);
    else if (key == "pi_star") params.pi_star = parse_double(key, value);
    else if (key == "sd_tau") params.sd_tau = parse_double(key, value);
    else if (key == "sd_R") params.sd_R = parse_double(key, value);
    else if (key == "sd_y") params.sd_y = parse_double(key, value);
    // policy / calibration block
    else if (key == "regime") regime = parse_regime(value);
    else if (key == "b_target") b_target = parse_double(key, value);
    // learning block
    else if (key == "n_train") n_train = parse_long(key, value);
    else if (key == "n_interval") n_interval = parse_long(key, value);
    else if (key == "n_test") n_test = static_cast<int>(parse_long(key, value));
    else if (key == "n_epi_max") n_epi_max = parse_long(key, value);
    else if (key == "n_burn") n_burn = parse_long(key, value);
    else if (key == "n_mem") n_mem = parse_long(key, value);
    else if (key == "n_batch") n_batch = static_cast<int>(parse_long(key, value));
    else if (key == "d_u_min") d_u_min = parse_double(key, value);
    else if (key == "lr") lr = parse_double(key, value);
    else if (key == "tau_learn") tau_learn = parse_double(key, value);
    else if (key == "hidden_layers") hidden_layers = static_cast<int>(parse_long(key, value));
    else if (key == "hidden_nodes") hidden_nodes = static_cast<int>(parse_long(key, value));
    else if (key == "reward_scale") reward_scale = parse_double(key, value);
    else if (key == "shocks") shocks = parse_flag(key, value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, value));
    // action bounds
    else if (key == "act_c_min") action_bounds.c_act.lo = parse_double(key, value);
    else if (key == "act_c_max") action_bounds.c_act.hi = parse_double(key, value);
    else if (key == "act_b_min") action_bounds.b_act.lo = parse_double(key, value);
    else if (key == "act_b_max") action_bounds.b_act.hi = parse_double(key, value);
    else if (key == "act_n_min") action_bounds.n.lo = parse_double(key, value);
    else if (key == "act_n_max") action_bounds.n.hi = parse_double(key, value);
    // initial-state box
    else if (key == "init_m_min") init_box.m.lo = parse_double(key, value);
    else if (key == "init_m_max") init_box.m.hi = parse_double(key, value);
    else if (key == "init_b_min") init_box.b.lo = parse_double(key, value);
    else if (key == "init_b_max") init_box.b.hi = parse_double(key, value);
    else if (key == "init_c_min") init_box.c.lo = parse_double(key, value);
    else if (key == "init_c_max") init_box.c.hi = parse_double(key, value);
    else if (key == "init_pi_min") init_box.pi.lo = parse_double(key, value);
    else if (key == "init_pi_max") init_box.pi.hi = parse_double(key, value);
    else if (key == "init_n_min") init_box.n.lo = parse_double(key, value);
    else if (key == "init_n_max") init_box.n.hi = parse_double(key, value);
    else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void ExperimentConfig::validate() const {
    params.validate();
    if (n_train < 1 || n_interval < 1 || n_test < 1 || n_epi_max < 1 || n_burn < 0 ||
        n_mem < 1 || n_batch < 1) {
        throw ConfigError("ExperimentConfig: all counts must be >= 1");
    }
    if (n_burn >= n_train) throw ConfigError("ExperimentConfig: n_burn must be below n_train");
    if (n_interval > n_train) throw ConfigError("ExperimentConfig: n_interval must not exceed n_train");
    if (!(d_u_min > 0.0) || !(lr > 0.0) || !(tau_learn > 0.0 && tau_learn <= 1.0)) {
        throw ConfigError("ExperimentConfig: d_u_min, lr positive; tau_learn in (0,1]");
    }
    if (hidden_layers < 1 || hidden_nodes < 1) {
        throw ConfigError("ExperimentConfig: network needs at least one hidden layer and node");
    }
}

ModelParams ExperimentConfig::resolved_params() const {
    ModelParams p = params;
    if (gamma0_auto) {
        const InflationRoots roots = solve_steady_inflation(p);
        const double pi = high_branch() ? roots.pi_high : roots.pi_low;
        p.gamma0 = calibrate_gamma0(p, pi, b_target);
    }
    return p;
}

SteadyState ExperimentConfig::anchor() const {
    const ModelParams p = resolved_params();
    const InflationRoots roots = solve_steady_inflation(p);
    return compute_steady_state(high_branch() ? roots.pi_high : roots.pi_low, p);
}

std::string ExperimentConfig::echo() const {
    const ModelParams p = resolved_params();
    std::ostringstream os;
    os << "regime = " << to_string(regime) << "\n";
    os << "beta = " << fmt(p.beta) << "\n";
    os << "sigma = " << fmt(p.sigma) << "\n";
    os << "eta = " << fmt(p.eta) << "\n";
    os << "phi = " << fmt(p.phi) << "\n";
    os << "chi = " << fmt(p.chi) << "\n";
    os << "gamma0 = " << fmt(p.gamma0) << "\n";
    os << "gamma = " << fmt(p.gamma) << "\n";
    os << "A = " << fmt(p.A) << "\n";
    os << "pi_star = " << fmt(p.pi_star) << "\n";
    os << "sd_tau = " << fmt(p.sd_tau) << "\n";
    os << "sd_R = " << fmt(p.sd_R) << "\n";
    os << "sd_y = " << fmt(p.sd_y) << "\n";
    os << "b_target = " << fmt(b_target) << "\n";
    os << "n_train = " << n_train << "\n";
    os << "n_interval = " << n_interval << "\n";
    os << "n_test = " << n_test << "\n";
    os << "n_epi_max = " << n_epi_max << "\n";
    os << "n_burn = " << n_burn << "\n";
    os << "n_mem = " << n_mem << "\n";
    os << "n_batch = " << n_batch << "\n";
    os << "d_u_min = " << fmt(d_u_min) << "\n";
    os << "lr = " << fmt(lr) << "\n";
    os << "tau_learn = " << fmt(tau_learn) << "\n";
    os << "hidden_layers = " << hidden_layers << "\n";
    os << "hidden_nodes = " << hidden_nodes << "\n";
    os << "reward_scale = " << fmt(reward_scale) << "\n";
    os << "shocks = " << (shocks ? "on" : "off") << "\n";
    os << "seed = " << seed << "\n";
    os << "act_c_min = " << fmt(action_bounds.c_act.lo) << "\n";
    os << "act_c_max = " << fmt(action_bounds.c_act.hi) << "\n";
    os << "act_b_min = " << fmt(action_bounds.b_act.lo) << "\n";
    os << "act_b_max = " << fmt(action_bounds.b_act.hi) << "\n";
    os << "act_n_min = " << fmt(action_bounds.n.lo) << "\n";
    os << "act_n_max = " << fmt(action_bounds.n.hi) << "\n";
    os << "init_m_min = " << fmt(init_box.m.lo) << "\n";
    os << "init_m_max = " << fmt(init_box.m.hi) << "\n";
    os << "init_b_min = " << fmt(init_box.b.lo) << "\n";
    os << "init_b_max = " << fmt(init_box.b.hi) << "\n";
    os << "init_c_min = " << fmt(init_box.c.lo) << "\n";
    os << "init_c_max = " << fmt(init_box.c.hi) << "\n";
    os << "init_pi_min = " << fmt(init_box.pi.lo) << "\n";
    os << "init_pi_max = " << fmt(init_box.pi.hi) << "\n";
    os << "init_n_min = " << fmt(init_box.n.lo) << "\n";
    os << "init_n_max = " << fmt(init_box.n.hi) << "\n";
    return os.str();
}

void ExperimentConfig::write_echo(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write config echo: " + path.string());
    os << echo();
}

} // namespace mflab
