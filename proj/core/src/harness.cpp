#include "mflab/harness.hpp"
#include "mflab/csv.hpp"
#include "mflab/errors.hpp"
#include "mflab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mflab {

namespace {

constexpr std::uint64_t kTagTrainEnv = 0x01;
constexpr std::uint64_t kTagAgent = 0x02;
constexpr std::uint64_t kTagSampler = 0x03;
constexpr std::uint64_t kTagTestEnv = 0x04;
constexpr std::uint64_t kTagFisherEnv = 0x05;

AgentConfig agent_config(const ExperimentConfig& cfg) {
    AgentConfig ac;
    ac.obs_dim = 8;
    ac.action_dim = 3;
    ac.hidden_layers = cfg.hidden_layers;
    ac.hidden_nodes = cfg.hidden_nodes;
    ac.lr = cfg.lr;
    ac.discount = cfg.params.beta;
    ac.tau_learn = cfg.tau_learn;
    ac.auto_entropy = true;
    ac.reward_scale = cfg.reward_scale;
    ac.bounds = cfg.action_bounds;
    return ac;
}

std::string phase_label(std::size_t cycle_idx, const PhaseBoundaries& ph) {
    if (ph.random_end && cycle_idx <= *ph.random_end) return "random";
    if (ph.learning_end && cycle_idx >= *ph.learning_end) return "rational";
    if (ph.random_end) return "learning";
    return "random";
}

} // namespace

PhaseBoundaries classify_phases(std::span<const double> series, int window) {
    if (series.size() < 2 * static_cast<std::size_t>(window)) {
        throw std::domain_error("classify_phases: series must span at least two windows");
    }
    PhaseBoundaries out;
    const LearningCurve lc = learning_curve(series, window);
    const auto& s = lc.normalized;
    const std::size_t n = s.size();
    std::size_t peak_idx = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (s[i] > s[peak_idx]) peak_idx = i;
    }
    const double peak = s[peak_idx];
    if (peak <= 0.0) return out; // flat series: no phases
    // the random phase ends at the peak, provided a sustained decline follows
    bool declines = false;
    for (std::size_t i = peak_idx + 1; i < n; ++i) {
        if (s[i] < 0.5 * peak) {
            declines = true;
            break;
        }
    }
    if (!declines) return out;
    out.random_end = peak_idx;
    // rational onset: below a tenth of peak for two windows (or to the end)
    const double thresh = 0.1 * peak;
    const std::size_t need = 2 * static_cast<std::size_t>(window);
    for (std::size_t j = peak_idx; j < n; ++j) {
        if (s[j] >= thresh) continue;
        const std::size_t span_end = std::min(n, j + need);
        bool ok = true;
        for (std::size_t k = j; k < span_end; ++k) {
            if (s[k] >= thresh) {
                ok = false;
                break;
            }
        }
        if (ok) {
            out.learning_end = j;
            break;
        }
    }
    return out;
}

std::vector<LoggedTransition> run_test_cycle(Agent& agent, const ExperimentConfig& cfg,
                                             long cycle, long step, bool pin_hours,
                                             double pinned_n) {
    const ModelParams params = cfg.resolved_params();
    const ObsBounds obs_bounds = ObsBounds::padded(cfg.init_box, params);
    const TerminationRule rule{cfg.d_u_min, cfg.n_epi_max};
    std::vector<LoggedTransition> log;

    for (int epi = 1; epi <= cfg.n_test; ++epi) {
        const std::uint64_t tag = pin_hours ? kTagFisherEnv : kTagTestEnv;
        Environment env(params, cfg.action_bounds, cfg.init_box, cfg.shocks,
                        mix_seed(cfg.seed, mix_seed(tag, static_cast<std::uint64_t>(cycle) * 1000 +
                                                             static_cast<std::uint64_t>(epi))));
        EnvState state = env.reset();
        double u_prev = std::numeric_limits<double>::quiet_NaN();
        long steps_in_epi = 0;
        while (true) {
            const Eigen::VectorXd obs = observe(state, obs_bounds);
            Action a = agent.act(obs, ActMode::Exploit);
            if (pin_hours) a.n = pinned_n;
            const StepResult res = env.step(a);
            ++steps_in_epi;
            const bool done = res.done || is_terminal(u_prev, res.info.u, steps_in_epi, rule);
            log.push_back({step, epi, true, state, a, res.info, res.reward, done});
            if (done) break;
            u_prev = res.info.u;
            state = res.next_state;
        }
    }
    return log;
}

CycleMetrics cycle_metrics(std::span<const LoggedTransition> transitions, long cycle, long step,
                           const SteadyState& anchor, const ModelParams& params, bool shocks) {
    std::vector<double> pis, bs, ns, ms, us;
    std::vector<double> eulers, moneys, labors;

    // split per episode
    long current = -1;
    std::vector<std::span<const LoggedTransition>> episodes;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        if (transitions[i].episode != current) {
            if (i > begin) episodes.push_back(transitions.subspan(begin, i - begin));
            begin = i;
            current = transitions[i].episode;
        }
    }
    if (transitions.size() > begin) episodes.push_back(transitions.subspan(begin));

    for (const auto& epi : episodes) {
        const std::size_t len = epi.size();
        if (len == 0) continue;
        const std::size_t end_idx = (shocks && len >= 2) ? len - 2 : len - 1;
        const StepInfo& endp = epi[end_idx].info;
        pis.push_back(endp.pi);
        bs.push_back(endp.b);
        ns.push_back(endp.n);
        ms.push_back(endp.m);
        us.push_back(endp.u);
        if (len >= 2) {
            const FocDistances d = foc_distances(epi[len - 2].info, epi[len - 1].info, params);
            if (d.euler) eulers.push_back(*d.euler);
            if (d.money) moneys.push_back(*d.money);
            if (d.labor) labors.push_back(*d.labor);
        }
    }

    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };

    CycleMetrics cm;
    cm.cycle = cycle;
    cm.step = step;
    cm.ss = ss_distances(pis, bs, ns, ms, us, anchor, PiConvention::Net);
    cm.euler = mean(eulers);
    cm.money = mean(moneys);
    cm.labor = mean(labors);
    cm.utility = mean(us);
    return cm;
}

void write_transitions_csv(const std::filesystem::path& path,
                           std::span<const LoggedTransition> transitions) {
    CsvWriter csv(path.string(),
                  {"step", "episode", "phase", "m_prev", "b_prev", "pi_prev", "c_prev", "n_prev",
                   "eps_tau", "eps_R", "eps_y", "c_act", "b_act", "n", "pi", "c", "b", "m", "R",
                   "tau", "y", "reward", "done"});
    for (const LoggedTransition& t : transitions) {
        csv.cell(t.step)
            .cell(t.episode)
            .cell(t.test_phase ? "test" : "train")
            .cell(t.state.m_prev)
            .cell(t.state.b_prev)
            .cell(t.state.pi_prev)
            .cell(t.state.c_prev)
            .cell(t.state.n_prev)
            .cell(t.state.shocks.eps_tau)
            .cell(t.state.shocks.eps_R)
            .cell(t.state.shocks.eps_y)
            .cell(t.action.c_act)
            .cell(t.action.b_act)
            .cell(t.action.n)
            .cell(t.info.pi)
            .cell(t.info.c)
            .cell(t.info.b)
            .cell(t.info.m)
            .cell(t.info.R)
            .cell(t.info.tau)
            .cell(t.info.y)
            .cell(t.reward)
            .cell(static_cast<long>(t.done ? 1 : 0));
        csv.endrow();
    }
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const CycleMetrics> cycles,
                       const PhaseBoundaries& phases) {
    CsvWriter csv(path.string(),
                  {"cycle", "step", "d_pi", "d_b", "d_n", "d_m", "d_u", "abs_d_pi", "abs_d_b",
                   "abs_d_n", "abs_d_m", "abs_d_u", "euler", "money", "labor", "utility", "phase"});
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        const CycleMetrics& c = cycles[i];
        csv.cell(c.cycle)
            .cell(c.step)
            .cell(c.ss.pi.mean_pct)
            .cell(c.ss.b.mean_pct)
            .cell(c.ss.n.mean_pct)
            .cell(c.ss.m.mean_pct)
            .cell(c.ss.u.mean_pct)
            .cell(c.ss.pi.mean_abs_pct)
            .cell(c.ss.b.mean_abs_pct)
            .cell(c.ss.n.mean_abs_pct)
            .cell(c.ss.m.mean_abs_pct)
            .cell(c.ss.u.mean_abs_pct)
            .cell(c.euler)
            .cell(c.money)
            .cell(c.labor)
            .cell(c.utility)
            .cell(phase_label(i, phases));
        csv.endrow();
    }
}

std::vector<CycleMetrics> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open metrics CSV: " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw IoError("metrics CSV empty: " + path.string());
    std::vector<CycleMetrics> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 16) throw IoError("metrics CSV row malformed: " + line);
        CycleMetrics c{};
        c.cycle = std::stol(cells[0]);
        c.step = std::stol(cells[1]);
        c.ss.pi = {std::stod(cells[2]), std::stod(cells[7])};
        c.ss.b = {std::stod(cells[3]), std::stod(cells[8])};
        c.ss.n = {std::stod(cells[4]), std::stod(cells[9])};
        c.ss.m = {std::stod(cells[5]), std::stod(cells[10])};
        c.ss.u = {std::stod(cells[6]), std::stod(cells[11])};
        c.euler = std::stod(cells[12]);
        c.money = std::stod(cells[13]);
        c.labor = std::stod(cells[14]);
        c.utility = std::stod(cells[15]);
        out.push_back(c);
    }
    return out;
}

RunArtifacts train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                   const std::function<void(long, long)>& progress) {
    cfg.validate();
    const ModelParams params = cfg.resolved_params();
    const SteadyState anchor = cfg.anchor();
    const ObsBounds obs_bounds = ObsBounds::padded(cfg.init_box, params);
    const TerminationRule rule{cfg.d_u_min, cfg.n_epi_max};

    std::filesystem::create_directories(out_dir);
    cfg.write_echo(out_dir / "config.cfg");

    Environment env(params, cfg.action_bounds, cfg.init_box, cfg.shocks,
                    mix_seed(cfg.seed, kTagTrainEnv));
    Agent agent(agent_config(cfg), mix_seed(cfg.seed, kTagAgent));
    ReplayBuffer buffer(static_cast<std::size_t>(cfg.n_mem));
    auto sampler = make_rng(cfg.seed, kTagSampler);

    RunArtifacts run;
    run.run_dir = out_dir;

    EnvState state = env.reset();
    double u_prev = std::numeric_limits<double>::quiet_NaN();
    long episode = 1;
    long steps_in_epi = 0;

    for (long step = 1; step <= cfg.n_train; ++step) {
        const Eigen::VectorXd obs = observe(state, obs_bounds);
        const ActMode mode = (step <= cfg.n_burn) ? ActMode::Random : ActMode::Explore;
        const Action action = agent.act(obs, mode);
        const StepResult res = env.step(action);
        ++steps_in_epi;
        ++run.total_env_steps;
        const bool done = res.done || is_terminal(u_prev, res.info.u, steps_in_epi, rule);
        // a bare step-cap truncation is not an absorbing state: the critic
        // keeps bootstrapping through it, only genuine terminations mask
        const bool du_stop = std::fabs(res.info.u - u_prev) < rule.d_u_min;
        const bool absorbing = res.done || du_stop;

        buffer.push(Transition{obs, agent.normalize_action(action), res.reward,
                               observe(res.next_state, obs_bounds), absorbing});
        if (buffer.size() >= static_cast<std::size_t>(cfg.n_batch)) {
            try {
                agent.update(buffer.sample(static_cast<std::size_t>(cfg.n_batch), sampler));
            } catch (const NumericalError&) {
                // flush what we have before surfacing the divergence
                write_metrics_csv(out_dir / "metrics.csv", run.cycles, run.phases);
                throw;
            }
        }

        if (step % cfg.n_interval == 0) {
            const long cycle = step / cfg.n_interval;
            // testing leaves the paused training episode and env untouched
            const EnvState paused = env.state();
            const double paused_r = env.r_prev();
            std::vector<LoggedTransition> transitions = run_test_cycle(agent, cfg, cycle, step);
            env.set_state(paused, paused_r);
            run.cycles.push_back(cycle_metrics(transitions, cycle, step, anchor, params, cfg.shocks));
            write_transitions_csv(out_dir / ("transitions_" + std::to_string(step) + ".csv"),
                                  transitions);
            const auto ckpt = out_dir / ("agent_" + std::to_string(step) + ".ckpt");
            agent.save(ckpt.string());
            run.checkpoints.push_back(ckpt);
            run.checkpoint_steps.push_back(step);
            if (progress) progress(step, cfg.n_train);
        }

        if (done) {
            state = env.reset();
            u_prev = std::numeric_limits<double>::quiet_NaN();
            ++episode;
            steps_in_epi = 0;
        } else {
            u_prev = res.info.u;
            state = res.next_state;
        }
    }

    const auto final_ckpt = out_dir / "agent_final.ckpt";
    agent.save(final_ckpt.string());
    run.checkpoints.push_back(final_ckpt);
    run.checkpoint_steps.push_back(cfg.n_train);

    // phase detection on the net-inflation absolute-distance series
    if (run.cycles.size() >= 50) {
        std::vector<double> pi_series;
        pi_series.reserve(run.cycles.size());
        for (const auto& c : run.cycles) pi_series.push_back(c.ss.pi.mean_abs_pct);
        run.phases = classify_phases(pi_series, 25);
    }

    write_metrics_csv(out_dir / "metrics.csv", run.cycles, run.phases);

    std::ofstream manifest(out_dir / "manifest.txt", std::ios::trunc);
    manifest << "seed = " << cfg.seed << "\n"
             << "checkpoint_format = 1\n"
             << "csv_format = 1\n"
             << "cycles = " << run.cycles.size() << "\n"
             << "env_steps = " << run.total_env_steps << "\n";
    for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
        manifest << "checkpoint " << run.checkpoint_steps[i] << " = "
                 << run.checkpoints[i].filename().string() << "\n";
    }
    return run;
}

RunArtifacts load_run(const std::filesystem::path& run_dir) {
    RunArtifacts run;
    run.run_dir = run_dir;
    std::ifstream manifest(run_dir / "manifest.txt");
    if (!manifest) throw IoError("cannot open run manifest: " + (run_dir / "manifest.txt").string());
    std::string line;
    while (std::getline(manifest, line)) {
        std::stringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "env_steps") {
            std::string eq;
            ss >> eq >> run.total_env_steps;
        } else if (key == "checkpoint") {
            long step = 0;
            std::string eq, file;
            ss >> step >> eq >> file;
            run.checkpoint_steps.push_back(step);
            run.checkpoints.push_back(run_dir / file);
        }
    }
    run.cycles = read_metrics_csv(run_dir / "metrics.csv");
    if (run.cycles.size() >= 50) {
        std::vector<double> pi_series;
        for (const auto& c : run.cycles) pi_series.push_back(c.ss.pi.mean_abs_pct);
        run.phases = classify_phases(pi_series, 25);
    }
    return run;
}

std::vector<FisherPoint> fisher_experiment(const RunArtifacts& run, const ExperimentConfig& cfg) {
    const SteadyState anchor = cfg.anchor();
    std::vector<FisherPoint> points;
    for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
        Agent agent = Agent::load(run.checkpoints[i].string());
        const long step = run.checkpoint_steps[i];
        const long cycle = step / std::max<long>(cfg.n_interval, 1);
        const std::vector<LoggedTransition> transitions =
            run_test_cycle(agent, cfg, cycle, step, /*pin_hours=*/true, anchor.n);
        for (std::size_t k = 0; k + 1 < transitions.size(); ++k) {
            if (transitions[k].episode != transitions[k + 1].episode) continue;
            points.push_back({step, cfg.params.beta * transitions[k].info.R,
                              transitions[k + 1].info.pi});
        }
    }
    return points;
}

} // namespace mflab
