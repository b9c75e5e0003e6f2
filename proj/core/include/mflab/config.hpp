#pragma once
#include "mflab/environment.hpp"
#include "mflab/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace mflab {

enum class Regime { AmpPfp, AmpAfp, PmpPfp, PmpAfp };

Regime parse_regime(const std::string& name);
std::string to_string(Regime r);
bool regime_high_branch(Regime r); ///< true for the AMP regimes (target root)
bool regime_passive_fiscal(Regime r);

/// One experiment: model calibration, regime selection, learning settings
/// and the action / initial-state boxes.
struct ExperimentConfig {
    ModelParams params{};      ///< Table-1 block; gamma/gamma0 resolved per regime
    Regime regime = Regime::AmpPfp;
    bool gamma_explicit = false;  ///< config overrode the regime's gamma
    bool gamma0_auto = true;      ///< calibrate gamma0 so steady bonds hit b_target
    double b_target = 4.0;

    ActionBounds action_bounds{};
    StateBounds init_box{};

    long n_train = 2500000;
    long n_interval = 10000;
    int n_test = 10;
    long n_epi_max = 25000;
    long n_burn = 10000;
    long n_mem = 25000;
    int n_batch = 256;
    double d_u_min = 1e-7;
    double lr = 1e-5;
    double tau_learn = 1e-3;
    int hidden_layers = 2;
    int hidden_nodes = 32;
    double reward_scale = 1.0;
    bool shocks = false;
    std::uint64_t seed = 1;

    /// Learning-settings defaults for one policy regime (bounds per branch,
    /// gamma per fiscal stance).
    static ExperimentConfig defaults_for(Regime r);

    /// Parses a flat key=value file on top of the regime defaults. The
    /// regime key is honored first so later keys override its presets.
    /// Unknown keys raise ConfigError naming the offender.
    static ExperimentConfig from_file(const std::filesystem::path& path);

    void apply(const std::string& key, const std::string& value);
    void validate() const;

    /// Model parameters with gamma and gamma0 resolved for the regime.
    ModelParams resolved_params() const;
    /// The regime's anchor steady state under the resolved parameters.
    SteadyState anchor() const;
    bool high_branch() const { return regime_high_branch(regime); }

    /// Full key=value snapshot; reloading it reproduces the run.
    std::string echo() const;
    void write_echo(const std::filesystem::path& path) const;
};

} // namespace mflab
