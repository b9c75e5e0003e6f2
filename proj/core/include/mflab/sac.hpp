#pragma once
#include "mflab/environment.hpp"
#include "mflab/neural.hpp"

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mflab {

/// Per-component affine ranges used to map observations into [-1, 1].
struct ObsBounds {
    std::array<Interval, 8> comps; ///< m, b, pi, c, n, eps_tau, eps_R, eps_y

    /// State components from the initial-state box; shock components span
    /// mean +- 5 standard deviations.
    static ObsBounds from_boxes(const StateBounds& box, const ModelParams& p);

    /// Training bounds: the initial-state box padded to `factor` times its
    /// half-width per component, so within-episode excursions (money rides
    /// toward far orbit rest points in particular) stay near [-1, 1].
    static ObsBounds padded(const StateBounds& box, const ModelParams& p, double factor = 8.0);

    /// Fixed wide economic ranges (money up to 4, bonds up to 8, rates and
    /// hours within +-50%). Keeps the informative state variation small
    /// relative to the input scale, like feeding raw levels.
    static ObsBounds wide(const ModelParams& p);
};

/// Affine map of the state tuple into [-1,1]^8. Out-of-range inputs pass
/// through the same map unclipped; degenerate intervals map to zero.
Eigen::VectorXd observe(const EnvState& s, const ObsBounds& bounds);

/// Inverse of observe (degenerate components recover the interval point).
EnvState unobserve(const Eigen::VectorXd& v, const ObsBounds& bounds);

/// One logged interaction, stored in normalized coordinates.
struct Transition {
    Eigen::VectorXd obs;
    Eigen::VectorXd act; ///< squash-space action in [-1,1]
    double reward;
    Eigen::VectorXd next_obs;
    bool done;
};

/// Fixed-size ring of transitions with oldest-first eviction.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    /// Uniform sample with replacement. Throws when n exceeds size().
    std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

    std::size_t size() const { return full_ ? storage_.size() : head_; }
    std::size_t capacity() const { return storage_.size(); }
    /// Oldest-first access.
    const Transition& at(std::size_t i) const;

private:
    std::vector<Transition> storage_;
    std::size_t head_ = 0;
    bool full_ = false;
};

enum class ActMode { Exploit, Explore, Random };

struct AgentConfig {
    int obs_dim = 8;
    int action_dim = 3;
    int hidden_layers = 2;
    int hidden_nodes = 32;
    double lr = 1e-5;
    double discount = 0.99;
    double tau_learn = 1e-3;
    bool auto_entropy = true;
    double reward_scale = 1.0;
    ActionBounds bounds{};
};

struct Losses {
    double critic1;
    double critic2;
    double actor;
    double temperature;
};

/// Soft actor-critic bundle: squashed-Gaussian actor, twin critics with
/// polyak-averaged targets, and automatic entropy-temperature tuning.
class Agent {
public:
    Agent(const AgentConfig& cfg, std::uint64_t seed);

    /// Exploit returns the squashed mean action; explore samples from the
    /// policy; random draws uniformly within the action bounds. Every mode
    /// produces in-bounds actions.
    Action act(const Eigen::VectorXd& obs, ActMode mode);

    /// Log-density of the squashed-and-rescaled policy at the given
    /// pre-squash sample.
    double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& pre_squash) const;

    /// One gradient step on critics, actor and temperature from a sampled
    /// batch, followed by a target soft update. Throws NumericalError when
    /// a loss turns non-finite, reporting the update index.
    Losses update(const std::vector<const Transition*>& batch);

    /// target <- (1-tau) target + tau critic, parameterwise.
    void soft_update(double tau);

    /// Actor objective on a batch (advances the sampling stream exactly as
    /// the actor half of update() would).
    double actor_objective(const std::vector<const Transition*>& batch);

    void save(const std::string& path) const;
    static Agent load(const std::string& path);

    Action denormalize_action(const Eigen::VectorXd& a_norm) const;
    Eigen::VectorXd normalize_action(const Action& a) const;

    /// Actor head outputs: mean and clamped log-std per action dimension.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> policy_heads(const Eigen::VectorXd& obs) const;
    /// Twin critic values at a normalized (obs, action) pair.
    std::pair<double, double> q_values(const Eigen::VectorXd& obs, const Eigen::VectorXd& a_norm) const;

    double temperature() const;
    double target_entropy() const { return target_entropy_; }
    long update_count() const { return updates_; }
    const AgentConfig& config() const { return cfg_; }

    const Network& actor() const { return actor_; }
    const Network& critic1() const { return critic1_; }
    const Network& critic2() const { return critic2_; }
    const Network& target1() const { return target1_; }
    const Network& target2() const { return target2_; }
    Network& mutable_actor() { return actor_; }
    Network& mutable_critic1() { return critic1_; }
    Network& mutable_critic2() { return critic2_; }
    Network& mutable_target1() { return target1_; }
    Network& mutable_target2() { return target2_; }

    friend bool operator==(const Agent& a, const Agent& b);

private:
    struct PolicyPass; // batched reparameterized sample + log-prob pieces

    PolicyPass sample_policy(const Eigen::MatrixXd& obs, Network::Cache* cache);

    AgentConfig cfg_{};
    double target_entropy_ = -3.0;
    double log_alpha_ = 0.0;
    Network actor_, critic1_, critic2_, target1_, target2_;
    AdamState opt_actor_, opt_critic1_, opt_critic2_;
    ScalarAdam opt_alpha_;
    std::mt19937_64 rng_;
    long updates_ = 0;

    Agent() = default;
};

} // namespace mflab
