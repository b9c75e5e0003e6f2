#include "mflab/adaptive.hpp"
#include "mflab/config.hpp"
#include "mflab/csv.hpp"
#include "mflab/errors.hpp"
#include "mflab/harness.hpp"
#include "mflab/metrics.hpp"
#include "mflab/model.hpp"
#include "mflab/stability.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mflab;

namespace {

// collects files created by one command so a failed run leaves no partial output
class OutputTracker {
public:
    fs::path track(const fs::path& p) {
        files_.push_back(p);
        return p;
    }
    void discard_all() {
        for (const auto& p : files_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
    void keep() { files_.clear(); }

private:
    std::vector<fs::path> files_;
};

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<long> seed;
    std::optional<std::string> regime;
    std::optional<std::string> shocks;
    std::optional<long> steps;
};

ExperimentConfig load_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = ExperimentConfig::from_file(opts.config_path);
    } else if (opts.regime) {
        cfg = ExperimentConfig::defaults_for(parse_regime(*opts.regime));
    } else {
        cfg = ExperimentConfig::defaults_for(Regime::AmpPfp);
    }
    if (opts.regime && !opts.config_path.empty()) {
        // regime override on top of a config file: reapply the regime presets
        ExperimentConfig preset = ExperimentConfig::defaults_for(parse_regime(*opts.regime));
        preset.params = cfg.params;
        preset.params.gamma = cfg.gamma_explicit ? cfg.params.gamma : preset.params.gamma;
        preset.gamma_explicit = cfg.gamma_explicit;
        preset.gamma0_auto = cfg.gamma0_auto;
        preset.b_target = cfg.b_target;
        preset.n_train = cfg.n_train;
        preset.n_interval = cfg.n_interval;
        preset.n_test = cfg.n_test;
        preset.n_epi_max = cfg.n_epi_max;
        preset.n_burn = cfg.n_burn;
        preset.n_mem = cfg.n_mem;
        preset.n_batch = cfg.n_batch;
        preset.d_u_min = cfg.d_u_min;
        preset.lr = cfg.lr;
        preset.tau_learn = cfg.tau_learn;
        preset.hidden_layers = cfg.hidden_layers;
        preset.hidden_nodes = cfg.hidden_nodes;
        preset.reward_scale = cfg.reward_scale;
        preset.shocks = cfg.shocks;
        preset.seed = cfg.seed;
        if (!preset.gamma_explicit) {
            preset.params.gamma = regime_passive_fiscal(preset.regime) ? 0.02 : 0.0;
        }
        cfg = preset;
    }
    if (opts.seed) cfg.seed = static_cast<std::uint64_t>(*opts.seed);
    if (opts.shocks) cfg.shocks = (*opts.shocks == "on");
    if (opts.steps) cfg.n_train = *opts.steps;
    cfg.validate();
    return cfg;
}

std::vector<ExperimentConfig> four_regimes(const ExperimentConfig& base) {
    std::vector<ExperimentConfig> out;
    for (Regime r : {Regime::AmpPfp, Regime::AmpAfp, Regime::PmpPfp, Regime::PmpAfp}) {
        ExperimentConfig cfg = ExperimentConfig::defaults_for(r);
        cfg.params = base.params;
        cfg.params.gamma = regime_passive_fiscal(r) ? 0.02 : 0.0;
        cfg.gamma0_auto = true;
        cfg.b_target = base.b_target;
        cfg.seed = base.seed;
        cfg.shocks = base.shocks;
        out.push_back(cfg);
    }
    return out;
}

int cmd_steady_state(const CommonOpts& opts, OutputTracker& outputs) {
    const ExperimentConfig base = load_config(opts);
    fs::create_directories(opts.out_dir);
    const fs::path path = outputs.track(fs::path(opts.out_dir) / "steady_state.csv");
    CsvWriter csv(path.string(), {"regime", "pi", "R", "y", "c", "n", "m", "b", "w", "u",
                                  "gamma0", "gamma"});
    for (const ExperimentConfig& cfg : four_regimes(base)) {
        const ModelParams p = cfg.resolved_params();
        const SteadyState ss = cfg.anchor();
        csv.cell(to_string(cfg.regime))
            .cell(ss.pi)
            .cell(ss.R)
            .cell(ss.y)
            .cell(ss.c)
            .cell(ss.n)
            .cell(ss.m)
            .cell(ss.b)
            .cell(ss.w)
            .cell(ss.u)
            .cell(p.gamma0)
            .cell(p.gamma);
        csv.endrow();
    }
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_stability(const CommonOpts& opts, OutputTracker& outputs) {
    const ExperimentConfig base = load_config(opts);
    fs::create_directories(opts.out_dir);

    const fs::path verdicts_path = outputs.track(fs::path(opts.out_dir) / "stability_verdicts.csv");
    {
        CsvWriter csv(verdicts_path.string(),
                      {"regime", "pi", "eig1", "eig2", "determinacy", "ev1", "ev2", "e_stable"});
        for (const ExperimentConfig& cfg : four_regimes(base)) {
            const ModelParams p = cfg.resolved_params();
            const SteadyState ss = cfg.anchor();
            const StabilityVerdict v = classify_point(p.gamma, ss.pi, p);
            csv.cell(to_string(cfg.regime))
                .cell(ss.pi)
                .cell(v.eig_bk.first)
                .cell(v.eig_bk.second)
                .cell(to_string(v.determinacy))
                .cell(v.eig_e.first)
                .cell(v.eig_e.second)
                .cell(v.e_stable ? "yes" : "no");
            csv.endrow();
        }
    }

    const fs::path map_path = outputs.track(fs::path(opts.out_dir) / "regime_map.csv");
    {
        const ModelParams p = base.params;
        const InflationRoots roots = solve_steady_inflation(p);
        std::vector<double> gammas;
        const double knife = 1.0 / p.beta - 1.0;
        const int n_cells = 50;
        for (int i = 0; i <= n_cells; ++i) {
            gammas.push_back(2.0 * knife * static_cast<double>(i) / n_cells);
        }
        const std::vector<double> pis{roots.pi_high, roots.pi_low};
        const auto cells = regime_map(gammas, pis, p);
        CsvWriter csv(map_path.string(), {"gamma", "pi_branch", "eig1", "eig2", "determinacy",
                                          "ev1", "ev2", "e_stable"});
        for (const RegimeCell& cell : cells) {
            if (cell.boundary || !cell.verdict) continue; // flagged, not classified
            csv.cell(cell.gamma)
                .cell(cell.high_branch ? "high" : "low")
                .cell(cell.verdict->eig_bk.first)
                .cell(cell.verdict->eig_bk.second)
                .cell(to_string(cell.verdict->determinacy))
                .cell(cell.verdict->eig_e.first)
                .cell(cell.verdict->eig_e.second)
                .cell(cell.verdict->e_stable ? "yes" : "no");
            csv.endrow();
        }
    }
    std::cout << "wrote " << verdicts_path.string() << " and " << map_path.string() << "\n";
    return 0;
}

int cmd_adaptive(const CommonOpts& opts, OutputTracker& outputs) {
    const ExperimentConfig base = load_config(opts);
    fs::create_directories(opts.out_dir);
    const fs::path summary_path = outputs.track(fs::path(opts.out_dir) / "al_summary.csv");
    CsvWriter summary(summary_path.string(),
                      {"regime", "converged", "diverged", "limit", "stop_t", "stop_reason"});
    for (const ExperimentConfig& cfg : four_regimes(base)) {
        ALConfig al;
        al.params = cfg.resolved_params();
        al.anchor = cfg.anchor();
        al.high_branch = cfg.high_branch();
        al.gain = GainKind::Decreasing;
        al.horizon = 50000;
        al.shocks = cfg.shocks;
        al.seed = cfg.seed;
        Beliefs bel0{al.anchor.pi + 1e-3, al.anchor.b * (1.0 + 1e-3), al.anchor.y};
        const ALTrajectory traj = simulate_al(al, bel0);

        const fs::path path =
            outputs.track(fs::path(opts.out_dir) / ("al_" + to_string(cfg.regime) + ".csv"));
        CsvWriter csv(path.string(),
                      {"t", "pi", "b", "R", "c", "m", "tau", "pi_e", "b_e", "gain"});
        for (const ALPoint& pt : traj.series) {
            csv.cell(pt.t)
                .cell(pt.pi)
                .cell(pt.b)
                .cell(pt.R)
                .cell(pt.c)
                .cell(pt.m)
                .cell(pt.tau)
                .cell(pt.pi_e)
                .cell(pt.b_e)
                .cell(pt.gain);
            csv.endrow();
        }
        const char* limit = traj.limit == ALLimit::High ? "high"
                            : traj.limit == ALLimit::Low ? "low"
                                                         : "none";
        summary.cell(to_string(cfg.regime))
            .cell(traj.converged ? "yes" : "no")
            .cell(traj.diverged ? "yes" : "no")
            .cell(limit)
            .cell(traj.stop_t)
            .cell(traj.stop_reason.empty() ? "-" : traj.stop_reason);
        summary.endrow();
        std::cout << to_string(cfg.regime) << ": converged=" << (traj.converged ? "yes" : "no")
                  << " diverged=" << (traj.diverged ? "yes" : "no") << "\n";
    }
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    const ExperimentConfig cfg = load_config(opts);
    const RunArtifacts run = train(cfg, opts.out_dir, [](long step, long total) {
        std::cout << "step " << step << "/" << total << "\n" << std::flush;
    });
    std::cout << "run complete: " << run.cycles.size() << " test cycles, artifacts in "
              << run.run_dir.string() << "\n";
    return 0;
}

int cmd_test(const CommonOpts& opts, const std::string& checkpoint, OutputTracker& outputs) {
    ExperimentConfig cfg = load_config(opts);
    Agent agent = Agent::load(checkpoint);
    fs::create_directories(opts.out_dir);
    const std::vector<LoggedTransition> transitions =
        run_test_cycle(agent, cfg, /*cycle=*/0, /*step=*/agent.update_count());
    const fs::path path = outputs.track(fs::path(opts.out_dir) / "transitions_test.csv");
    write_transitions_csv(path, transitions);
    std::cout << "wrote " << path.string() << " (" << transitions.size() << " transitions)\n";
    return 0;
}

int cmd_fisher(const CommonOpts& opts, const std::string& run_dir, OutputTracker& outputs) {
    CommonOpts run_opts = opts;
    if (run_opts.config_path.empty()) run_opts.config_path = (fs::path(run_dir) / "config.cfg").string();
    const ExperimentConfig cfg = load_config(run_opts);
    const RunArtifacts run = load_run(run_dir);
    const std::vector<FisherPoint> points = fisher_experiment(run, cfg);
    fs::create_directories(opts.out_dir);
    const fs::path path = outputs.track(fs::path(opts.out_dir) / "fisher.csv");
    CsvWriter csv(path.string(), {"step", "beta_R", "pi_next"});
    for (const FisherPoint& pt : points) {
        csv.cell(pt.step).cell(pt.beta_R).cell(pt.pi_next);
        csv.endrow();
    }
    std::cout << "wrote " << path.string() << " (" << points.size() << " points)\n";
    return 0;
}

int cmd_report(const CommonOpts& opts, const std::string& run_dir, OutputTracker& outputs) {
    CommonOpts run_opts = opts;
    if (run_opts.config_path.empty()) run_opts.config_path = (fs::path(run_dir) / "config.cfg").string();
    const ExperimentConfig cfg = load_config(run_opts);
    const RunArtifacts run = load_run(run_dir);
    if (run.cycles.empty()) throw IoError("run directory has no recorded cycles: " + run_dir);
    fs::create_directories(opts.out_dir);

    const char* series_names[8] = {"abs_d_pi", "abs_d_b", "abs_d_n", "abs_d_m",
                                   "abs_d_u", "euler",   "money",   "labor"};
    std::vector<std::vector<double>> series(8);
    for (const CycleMetrics& c : run.cycles) {
        series[0].push_back(c.ss.pi.mean_abs_pct);
        series[1].push_back(c.ss.b.mean_abs_pct);
        series[2].push_back(c.ss.n.mean_abs_pct);
        series[3].push_back(c.ss.m.mean_abs_pct);
        series[4].push_back(c.ss.u.mean_abs_pct);
        series[5].push_back(c.euler);
        series[6].push_back(c.money);
        series[7].push_back(c.labor);
    }

    if (run.cycles.size() >= 25) {
        const fs::path curves_path = outputs.track(fs::path(opts.out_dir) / "learning_curves.csv");
        std::vector<std::string> header{"cycle", "step"};
        for (const char* name : series_names) {
            header.push_back(std::string(name) + "_smoothed");
            header.push_back(std::string(name) + "_lower");
            header.push_back(std::string(name) + "_upper");
            header.push_back(std::string(name) + "_normalized");
        }
        std::ofstream os(curves_path, std::ios::trunc);
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << "\n";
        std::vector<LearningCurve> curves;
        for (const auto& s : series) curves.push_back(learning_curve(s, 25));
        for (std::size_t i = 0; i < run.cycles.size(); ++i) {
            os << run.cycles[i].cycle << "," << run.cycles[i].step;
            for (const LearningCurve& lc : curves) {
                os << "," << csv_num(lc.smoothed[i]) << "," << csv_num(lc.lower[i]) << ","
                   << csv_num(lc.upper[i]) << "," << csv_num(lc.normalized[i]);
            }
            os << "\n";
        }
    }

    // Table-style summary over the trailing fifth of the run
    const fs::path summary_path = outputs.track(fs::path(opts.out_dir) / "summary.csv");
    {
        const SteadyState anchor = cfg.anchor();
        const std::size_t tail = std::max<std::size_t>(1, run.cycles.size() / 5);
        std::vector<double> pis, bs, ns, ms, us;
        for (std::size_t i = run.cycles.size() - tail; i < run.cycles.size(); ++i) {
            // per-cycle means pooled with equal weights
            pis.push_back(run.cycles[i].ss.pi.mean_pct);
            bs.push_back(run.cycles[i].ss.b.mean_pct);
            ns.push_back(run.cycles[i].ss.n.mean_pct);
            ms.push_back(run.cycles[i].ss.m.mean_pct);
            us.push_back(run.cycles[i].ss.u.mean_pct);
        }
        auto mean_of = [](const std::vector<double>& v) {
            double acc = 0.0;
            for (double x : v) acc += x;
            return acc / static_cast<double>(v.size());
        };
        std::vector<double> apis, abs_, ans, ams, aus;
        for (std::size_t i = run.cycles.size() - tail; i < run.cycles.size(); ++i) {
            apis.push_back(run.cycles[i].ss.pi.mean_abs_pct);
            abs_.push_back(run.cycles[i].ss.b.mean_abs_pct);
            ans.push_back(run.cycles[i].ss.n.mean_abs_pct);
            ams.push_back(run.cycles[i].ss.m.mean_abs_pct);
            aus.push_back(run.cycles[i].ss.u.mean_abs_pct);
        }
        CsvWriter csv(summary_path.string(),
                      {"variable", "d_ss_pct", "abs_d_ss_pct", "steady_state"});
        const char* vars[5] = {"pi", "b", "n", "m", "u"};
        const double refs[5] = {anchor.pi, anchor.b, anchor.n, anchor.m, anchor.u};
        const std::vector<double>* signed_v[5] = {&pis, &bs, &ns, &ms, &us};
        const std::vector<double>* abs_v[5] = {&apis, &abs_, &ans, &ams, &aus};
        for (int k = 0; k < 5; ++k) {
            csv.cell(vars[k]).cell(mean_of(*signed_v[k])).cell(mean_of(*abs_v[k])).cell(refs[k]);
            csv.endrow();
        }
    }

    // phase boundaries
    const fs::path phases_path = outputs.track(fs::path(opts.out_dir) / "phases.txt");
    {
        std::ofstream os(phases_path, std::ios::trunc);
        if (run.phases.random_end) {
            os << "random_end_cycle = " << run.cycles[*run.phases.random_end].cycle << "\n";
        } else {
            os << "random_end_cycle = none\n";
        }
        if (run.phases.learning_end) {
            os << "learning_end_cycle = " << run.cycles[*run.phases.learning_end].cycle << "\n";
        } else {
            os << "learning_end_cycle = none\n";
        }
    }
    std::cout << "wrote report to " << opts.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"monetary-fiscal model laboratory: steady states, stability, adaptive "
                 "learning and a soft actor-critic household"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string checkpoint;
    std::string run_dir;

    auto add_common = [&](CLI::App* sub, bool with_out = true) {
        sub->add_option("--config", opts.config_path, "flat key=value configuration file");
        if (with_out) sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed, "seed override");
        sub->add_option("--regime", opts.regime, "amp-pfp | amp-afp | pmp-pfp | pmp-afp")
            ->check(CLI::IsMember({"amp-pfp", "amp-afp", "pmp-pfp", "pmp-afp"}));
        sub->add_option("--shocks", opts.shocks, "on | off")->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--steps", opts.steps, "override the training-step budget");
    };

    CLI::App* ss = app.add_subcommand("steady-state", "solve the four regime steady states");
    add_common(ss);
    CLI::App* stab = app.add_subcommand("stability", "determinacy and learnability verdicts");
    add_common(stab);
    CLI::App* adapt = app.add_subcommand("adaptive", "adaptive-learning simulations per regime");
    add_common(adapt);
    CLI::App* train_cmd = app.add_subcommand("train", "train the household agent");
    add_common(train_cmd);
    CLI::App* test_cmd = app.add_subcommand("test", "run test episodes from a checkpoint");
    add_common(test_cmd);
    test_cmd->add_option("--checkpoint", checkpoint, "agent checkpoint file")->required();
    CLI::App* fisher_cmd = app.add_subcommand("fisher", "pinned-hours expectations experiment");
    add_common(fisher_cmd);
    fisher_cmd->add_option("--run", run_dir, "training run directory")->required();
    CLI::App* report_cmd = app.add_subcommand("report", "aggregate a run into curves and summaries");
    add_common(report_cmd);
    report_cmd->add_option("--run", run_dir, "training run directory")->required();

    CLI11_PARSE(app, argc, argv);

    OutputTracker outputs;
    try {
        int rc = 1;
        if (ss->parsed()) rc = cmd_steady_state(opts, outputs);
        else if (stab->parsed()) rc = cmd_stability(opts, outputs);
        else if (adapt->parsed()) rc = cmd_adaptive(opts, outputs);
        else if (train_cmd->parsed()) rc = cmd_train(opts);
        else if (test_cmd->parsed()) rc = cmd_test(opts, checkpoint, outputs);
        else if (fisher_cmd->parsed()) rc = cmd_fisher(opts, run_dir, outputs);
        else if (report_cmd->parsed()) rc = cmd_report(opts, run_dir, outputs);
        outputs.keep();
        return rc;
    } catch (const ConfigError& e) {
        outputs.discard_all();
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        // training divergence keeps its flushed artifacts; file outputs of
        // other commands are partial and removed
        outputs.discard_all();
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        outputs.discard_all();
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        outputs.discard_all();
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        outputs.discard_all();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
