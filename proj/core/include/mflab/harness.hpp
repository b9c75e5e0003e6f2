#pragma once
#include "mflab/config.hpp"
#include "mflab/environment.hpp"
#include "mflab/metrics.hpp"
#include "mflab/sac.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mflab {

/// One fully-logged environment transition (the transition-CSV row).
struct LoggedTransition {
    long step;    ///< training-step index the record belongs to
    long episode;
    bool test_phase; ///< written as phase=train|test
    EnvState state;
    Action action;
    StepInfo info;
    double reward;
    bool done;
};

struct CycleMetrics {
    long cycle; ///< 1-based test-cycle index
    long step;  ///< training step the cycle ran at
    SsDistances ss;
    double euler;
    double money;
    double labor;
    double utility; ///< mean endpoint utility
};

struct PhaseBoundaries {
    std::optional<std::size_t> random_end;   ///< index where the random phase ends
    std::optional<std::size_t> learning_end; ///< index where the rational phase begins
};

/// Phase detection on a learning-curve series: the random phase ends at the
/// peak of the window-smoothed normalized series (provided the curve later
/// falls below half peak), and the rational phase starts where the series
/// stays below a tenth of peak for two windows (truncated at the series end).
PhaseBoundaries classify_phases(std::span<const double> series, int window = 25);

struct RunArtifacts {
    std::filesystem::path run_dir;
    std::vector<CycleMetrics> cycles;
    std::vector<std::filesystem::path> checkpoints; ///< cycle checkpoints plus the final one
    std::vector<long> checkpoint_steps;
    PhaseBoundaries phases; ///< detected on the |d_ss| net-inflation series
    long total_env_steps = 0;
};

/// Runs the training-cum-testing protocol and writes the run directory:
/// config echo, per-cycle transition CSVs, metrics CSV, checkpoints and a
/// manifest. Deterministic for a fixed config and seed.
RunArtifacts train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                   const std::function<void(long, long)>& progress = {});

/// N_test exploit-mode episodes from fresh random initial states; the agent
/// is not mutated. cycle seeds the episode initial-state stream.
std::vector<LoggedTransition> run_test_cycle(Agent& agent, const ExperimentConfig& cfg,
                                             long cycle, long step,
                                             bool pin_hours = false, double pinned_n = 1.0);

/// Summary of one test cycle's episodes (endpoint conventions: last
/// transition, or second-to-last when shocks are on; FOC distances from the
/// final transition pair of each episode).
CycleMetrics cycle_metrics(std::span<const LoggedTransition> transitions, long cycle, long step,
                           const SteadyState& anchor, const ModelParams& params, bool shocks);

struct FisherPoint {
    long step;      ///< checkpoint training step
    double beta_R;  ///< beta times the current policy rate
    double pi_next; ///< next period's realized inflation
};

/// Reloads every checkpoint of a run and reruns its test cycles with hours
/// pinned at the steady state, recording (beta R_t, pi_{t+1}) pairs.
std::vector<FisherPoint> fisher_experiment(const RunArtifacts& run, const ExperimentConfig& cfg);

/// Reads a metrics CSV back (column order as written by train()).
std::vector<CycleMetrics> read_metrics_csv(const std::filesystem::path& path);

/// Reconstructs run artifacts from a run directory (manifest + metrics CSV);
/// phases are re-derived from the stored series.
RunArtifacts load_run(const std::filesystem::path& run_dir);

void write_transitions_csv(const std::filesystem::path& path,
                           std::span<const LoggedTransition> transitions);
void write_metrics_csv(const std::filesystem::path& path, std::span<const CycleMetrics> cycles,
                       const PhaseBoundaries& phases);

} // namespace mflab
