#include "mflab/sac.hpp"
#include "mflab/errors.hpp"
#include "mflab/rng.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace mflab {

namespace {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kHalfLog2Pi = 0.9189385332046727; // 0.5 ln(2 pi)
constexpr char kMagic[9] = "MFLABAG1";

double softplus(double x) {
    return std::log1p(std::exp(-std::fabs(x))) + std::max(x, 0.0);
}

/// ln(1 - tanh(u)^2) in a form stable for large |u|.
double log_one_minus_tanh_sq(double u) {
    return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

double affine_to_unit(double v, const Interval& iv) {
    const double w = iv.hi - iv.lo;
    if (w == 0.0) return 0.0;
    return 2.0 * (v - iv.lo) / w - 1.0;
}

double affine_from_unit(double v, const Interval& iv) {
    const double w = iv.hi - iv.lo;
    if (w == 0.0) return iv.lo;
    return iv.lo + 0.5 * (v + 1.0) * w;
}

void write_raw(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw IoError("agent checkpoint truncated");
}

void write_f64(std::ostream& os, double v) { write_raw(os, &v, sizeof v); }
void write_i64(std::ostream& os, std::int64_t v) { write_raw(os, &v, sizeof v); }

double read_f64(std::istream& is) { double v; read_raw(is, &v, sizeof v); return v; }
std::int64_t read_i64(std::istream& is) { std::int64_t v; read_raw(is, &v, sizeof v); return v; }

} // namespace

ObsBounds ObsBounds::from_boxes(const StateBounds& box, const ModelParams& p) {
    ObsBounds out;
    out.comps[0] = box.m;
    out.comps[1] = box.b;
    out.comps[2] = box.pi;
    out.comps[3] = box.c;
    out.comps[4] = box.n;
    out.comps[5] = Interval{-5.0 * p.sd_tau, 5.0 * p.sd_tau};
    out.comps[6] = Interval{1.0 - 5.0 * p.sd_R, 1.0 + 5.0 * p.sd_R};
    out.comps[7] = Interval{1.0 - 5.0 * p.sd_y, 1.0 + 5.0 * p.sd_y};
    return out;
}

ObsBounds ObsBounds::padded(const StateBounds& box, const ModelParams& p, double factor) {
    ObsBounds out = from_boxes(box, p);
    for (int i = 0; i < 5; ++i) {
        const double mid = 0.5 * (out.comps[i].lo + out.comps[i].hi);
        const double half = 0.5 * (out.comps[i].hi - out.comps[i].lo) * factor;
        out.comps[i] = Interval{mid - half, mid + half};
    }
    return out;
}

ObsBounds ObsBounds::wide(const ModelParams& p) {
    StateBounds levels;
    levels.m = {0.0, 4.0};
    levels.b = {0.0, 8.0};
    levels.pi = {0.5, 1.5};
    levels.c = {0.5, 1.5};
    levels.n = {0.5, 1.5};
    return from_boxes(levels, p);
}

Eigen::VectorXd observe(const EnvState& s, const ObsBounds& bounds) {
    Eigen::VectorXd v(8);
    v[0] = affine_to_unit(s.m_prev, bounds.comps[0]);
    v[1] = affine_to_unit(s.b_prev, bounds.comps[1]);
    v[2] = affine_to_unit(s.pi_prev, bounds.comps[2]);
    v[3] = affine_to_unit(s.c_prev, bounds.comps[3]);
    v[4] = affine_to_unit(s.n_prev, bounds.comps[4]);
    v[5] = affine_to_unit(s.shocks.eps_tau, bounds.comps[5]);
    v[6] = affine_to_unit(s.shocks.eps_R, bounds.comps[6]);
    v[7] = affine_to_unit(s.shocks.eps_y, bounds.comps[7]);
    return v;
}

EnvState unobserve(const Eigen::VectorXd& v, const ObsBounds& bounds) {
    if (v.size() != 8) throw std::invalid_argument("unobserve: observation must have 8 components");
    EnvState s;
    s.m_prev = affine_from_unit(v[0], bounds.comps[0]);
    s.b_prev = affine_from_unit(v[1], bounds.comps[1]);
    s.pi_prev = affine_from_unit(v[2], bounds.comps[2]);
    s.c_prev = affine_from_unit(v[3], bounds.comps[3]);
    s.n_prev = affine_from_unit(v[4], bounds.comps[4]);
    s.shocks.eps_tau = affine_from_unit(v[5], bounds.comps[5]);
    s.shocks.eps_R = affine_from_unit(v[6], bounds.comps[6]);
    s.shocks.eps_y = affine_from_unit(v[7], bounds.comps[7]);
    return s;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
    if (capacity == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
    storage_.reserve(capacity);
    storage_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
    storage_[head_] = std::move(t);
    head_ = (head_ + 1) % storage_.size();
    if (head_ == 0) full_ = true;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    const std::size_t sz = size();
    if (n > sz) throw std::logic_error("ReplayBuffer::sample: fewer transitions than requested");
    std::uniform_int_distribution<std::size_t> pick(0, sz - 1);
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(&at(pick(rng)));
    }
    return out;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("ReplayBuffer::at");
    if (!full_) return storage_[i];
    return storage_[(head_ + i) % storage_.size()];
}

struct Agent::PolicyPass {
    Eigen::MatrixXd mu, log_std_raw, log_std, std_dev, xi, u, a;
    Eigen::RowVectorXd log_prob;
};

Agent::Agent(const AgentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), target_entropy_(-static_cast<double>(cfg.action_dim)), rng_(mix_seed(seed, 0xA6)) {
    if (cfg_.obs_dim <= 0 || cfg_.action_dim <= 0 || cfg_.hidden_layers < 1 || cfg_.hidden_nodes < 1) {
        throw ConfigError("AgentConfig: invalid dimensions");
    }
    std::vector<int> actor_dims{cfg_.obs_dim};
    std::vector<int> critic_dims{cfg_.obs_dim + cfg_.action_dim};
    for (int i = 0; i < cfg_.hidden_layers; ++i) {
        actor_dims.push_back(cfg_.hidden_nodes);
        critic_dims.push_back(cfg_.hidden_nodes);
    }
    actor_dims.push_back(2 * cfg_.action_dim);
    critic_dims.push_back(1);

    auto init_rng = make_rng(seed, 0x11);
    actor_ = Network(actor_dims, init_rng);
    critic1_ = Network(critic_dims, init_rng);
    critic2_ = Network(critic_dims, init_rng);
    target1_ = critic1_;
    target2_ = critic2_;

    const AdamConfig opt{cfg_.lr, 0.9, 0.999, 1e-8};
    opt_actor_ = AdamState(actor_, opt);
    opt_critic1_ = AdamState(critic1_, opt);
    opt_critic2_ = AdamState(critic2_, opt);
    opt_alpha_ = ScalarAdam(opt);
}

double Agent::temperature() const { return std::exp(log_alpha_); }

Eigen::VectorXd Agent::normalize_action(const Action& a) const {
    Eigen::VectorXd v(3);
    v[0] = affine_to_unit(a.c_act, cfg_.bounds.c_act);
    v[1] = affine_to_unit(a.b_act, cfg_.bounds.b_act);
    v[2] = affine_to_unit(a.n, cfg_.bounds.n);
    return v;
}

Action Agent::denormalize_action(const Eigen::VectorXd& a_norm) const {
    Action a;
    a.c_act = affine_from_unit(a_norm[0], cfg_.bounds.c_act);
    a.b_act = affine_from_unit(a_norm[1], cfg_.bounds.b_act);
    a.n = affine_from_unit(a_norm[2], cfg_.bounds.n);
    return a;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> Agent::policy_heads(const Eigen::VectorXd& obs) const {
    const Eigen::VectorXd out = actor_.forward(obs);
    const int na = cfg_.action_dim;
    Eigen::VectorXd mu = out.head(na);
    Eigen::VectorXd log_std = out.tail(na).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    return {mu, log_std};
}

std::pair<double, double> Agent::q_values(const Eigen::VectorXd& obs, const Eigen::VectorXd& a_norm) const {
    Eigen::VectorXd x(cfg_.obs_dim + cfg_.action_dim);
    x << obs, a_norm;
    return {critic1_.forward(x)[0], critic2_.forward(x)[0]};
}

Action Agent::act(const Eigen::VectorXd& obs, ActMode mode) {
    if (mode == ActMode::Random) {
        auto draw = [this](const Interval& iv) {
            if (iv.hi == iv.lo) return iv.lo;
            std::uniform_real_distribution<double> u(iv.lo, iv.hi);
            return u(rng_);
        };
        return Action{draw(cfg_.bounds.c_act), draw(cfg_.bounds.b_act), draw(cfg_.bounds.n)};
    }
    auto [mu, log_std] = policy_heads(obs);
    Eigen::VectorXd u = mu;
    if (mode == ActMode::Explore) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int d = 0; d < cfg_.action_dim; ++d) {
            u[d] += std::exp(log_std[d]) * gauss(rng_);
        }
    }
    Eigen::VectorXd a_norm = u.array().tanh();
    return denormalize_action(a_norm);
}

double Agent::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& pre_squash) const {
    auto [mu, log_std] = policy_heads(obs);
    double lp = 0.0;
    const double scales[3] = {0.5 * (cfg_.bounds.c_act.hi - cfg_.bounds.c_act.lo),
                              0.5 * (cfg_.bounds.b_act.hi - cfg_.bounds.b_act.lo),
                              0.5 * (cfg_.bounds.n.hi - cfg_.bounds.n.lo)};
    for (int d = 0; d < cfg_.action_dim; ++d) {
        const double sd = std::exp(log_std[d]);
        const double z = (pre_squash[d] - mu[d]) / sd;
        lp += -kHalfLog2Pi - log_std[d] - 0.5 * z * z;
        lp -= log_one_minus_tanh_sq(pre_squash[d]) + std::log(scales[d]);
    }
    return lp;
}

Agent::PolicyPass Agent::sample_policy(const Eigen::MatrixXd& obs, Network::Cache* cache) {
    const int na = cfg_.action_dim;
    const Eigen::Index n = obs.cols();
    PolicyPass pp;
    Eigen::MatrixXd heads = cache ? actor_.forward(obs, *cache) : actor_.forward(obs);
    pp.mu = heads.topRows(na);
    pp.log_std_raw = heads.bottomRows(na);
    pp.log_std = pp.log_std_raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    pp.std_dev = pp.log_std.array().exp().matrix();
    pp.xi.resize(na, n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index j = 0; j < n; ++j)
        for (int d = 0; d < na; ++d) pp.xi(d, j) = gauss(rng_);
    pp.u = pp.mu + pp.std_dev.cwiseProduct(pp.xi);
    pp.a = pp.u.array().tanh();

    // policy entropy is accounted in squash space (the [-1,1] action
    // interface the agent acts on), where the entropy target -dim(A) is
    // attainable; the rescale Jacobian is a constant that only shifts
    // values, and the public log_prob op adds it for raw-action densities
    pp.log_prob = Eigen::RowVectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double lp = 0.0;
        for (int d = 0; d < na; ++d) {
            lp += -kHalfLog2Pi - pp.log_std(d, j) - 0.5 * pp.xi(d, j) * pp.xi(d, j);
            lp -= log_one_minus_tanh_sq(pp.u(d, j));
        }
        pp.log_prob[j] = lp;
    }
    return pp;
}

Losses Agent::update(const std::vector<const Transition*>& batch) {
    if (batch.empty()) throw std::logic_error("Agent::update: empty batch");
    const int no = cfg_.obs_dim;
    const int na = cfg_.action_dim;
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());

    Eigen::MatrixXd obs(no, n), next_obs(no, n);
    Eigen::MatrixXd act(na, n);
    Eigen::RowVectorXd reward(n), not_done(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Transition& t = *batch[j];
        obs.col(j) = t.obs;
        next_obs.col(j) = t.next_obs;
        act.col(j) = t.act;
        reward[j] = t.reward * cfg_.reward_scale;
        not_done[j] = t.done ? 0.0 : 1.0;
    }
    const double alpha = temperature();

    // critic targets from the frozen networks and the current policy
    PolicyPass next_pp = sample_policy(next_obs, nullptr);
    Eigen::MatrixXd next_in(no + na, n);
    next_in << next_obs, next_pp.a;
    Eigen::RowVectorXd tq1 = target1_.forward(next_in).row(0);
    Eigen::RowVectorXd tq2 = target2_.forward(next_in).row(0);
    Eigen::RowVectorXd target =
        (reward.array() +
         cfg_.discount * not_done.array() *
             (tq1.cwiseMin(tq2).array() - alpha * next_pp.log_prob.array()))
            .matrix();

    Eigen::MatrixXd critic_in(no + na, n);
    critic_in << obs, act;

    Losses losses{};
    const double inv_n = 1.0 / static_cast<double>(n);
    // mean-squared Bellman residuum per critic
    {
        Network::Cache cache;
        Eigen::RowVectorXd q = critic1_.forward(critic_in, cache).row(0);
        Eigen::RowVectorXd err = q - target;
        losses.critic1 = inv_n * err.squaredNorm();
        Network::Gradients grads = critic1_.zero_gradients();
        critic1_.backward(cache, (2.0 * inv_n) * err, grads);
        opt_critic1_.step(critic1_, grads);
    }
    {
        Network::Cache cache;
        Eigen::RowVectorXd q = critic2_.forward(critic_in, cache).row(0);
        Eigen::RowVectorXd err = q - target;
        losses.critic2 = inv_n * err.squaredNorm();
        Network::Gradients grads = critic2_.zero_gradients();
        critic2_.backward(cache, (2.0 * inv_n) * err, grads);
        opt_critic2_.step(critic2_, grads);
    }

    // actor: ascend min-critic value net of the entropy penalty
    {
        Network::Cache actor_cache;
        PolicyPass pp = sample_policy(obs, &actor_cache);
        Eigen::MatrixXd actor_in(no + na, n);
        actor_in << obs, pp.a;

        Network::Cache c1_cache, c2_cache;
        Eigen::RowVectorXd q1 = critic1_.forward(actor_in, c1_cache).row(0);
        Eigen::RowVectorXd q2 = critic2_.forward(actor_in, c2_cache).row(0);
        Eigen::RowVectorXd qmin = q1.cwiseMin(q2);
        losses.actor = inv_n * (alpha * pp.log_prob - qmin).sum();

        // route dQmin/da through whichever critic attains the minimum
        Eigen::RowVectorXd pick1 = (q1.array() <= q2.array()).cast<double>().matrix();
        Network::Gradients scratch1 = critic1_.zero_gradients();
        Network::Gradients scratch2 = critic2_.zero_gradients();
        Eigen::MatrixXd gin1 = critic1_.backward(c1_cache, pick1 * inv_n, scratch1);
        Eigen::MatrixXd gin2 = critic2_.backward(c2_cache, (1.0 - pick1.array()).matrix() * inv_n, scratch2);
        Eigen::MatrixXd dq_da = gin1.bottomRows(na) + gin2.bottomRows(na); // d(mean qmin)/da

        // reparameterized chain: a = tanh(u), u = mu + std xi
        Eigen::MatrixXd one_minus_a2 = (1.0 - pp.a.array().square()).matrix();
        Eigen::MatrixXd tanh_u = pp.a;
        Eigen::MatrixXd dl_du = (alpha * inv_n) * 2.0 * tanh_u - dq_da.cwiseProduct(one_minus_a2);
        Eigen::MatrixXd dl_dmu = dl_du;
        Eigen::MatrixXd dl_dstd_path = dl_du.cwiseProduct(pp.std_dev.cwiseProduct(pp.xi));
        Eigen::MatrixXd dl_dlogstd =
            dl_dstd_path - Eigen::MatrixXd::Constant(na, n, alpha * inv_n);
        // clamp subgradient: zero where the raw log-std left [min, max]
        Eigen::MatrixXd in_range =
            ((pp.log_std_raw.array() > kLogStdMin) && (pp.log_std_raw.array() < kLogStdMax))
                .cast<double>()
                .matrix();
        dl_dlogstd = dl_dlogstd.cwiseProduct(in_range);

        Eigen::MatrixXd grad_heads(2 * na, n);
        grad_heads << dl_dmu, dl_dlogstd;
        Network::Gradients agrads = actor_.zero_gradients();
        actor_.backward(actor_cache, grad_heads, agrads);
        opt_actor_.step(actor_, agrads);

        if (cfg_.auto_entropy) {
            const double mean_lp = pp.log_prob.mean();
            losses.temperature = -log_alpha_ * (mean_lp + target_entropy_);
            const double grad = -(mean_lp + target_entropy_);
            log_alpha_ = opt_alpha_.step(log_alpha_, grad);
        } else {
            losses.temperature = 0.0;
        }
    }

    soft_update(cfg_.tau_learn);
    ++updates_;

    if (!std::isfinite(losses.critic1) || !std::isfinite(losses.critic2) ||
        !std::isfinite(losses.actor) || !std::isfinite(losses.temperature)) {
        throw NumericalError("Agent::update: non-finite loss at update " + std::to_string(updates_));
    }
    return losses;
}

double Agent::actor_objective(const std::vector<const Transition*>& batch) {
    const int no = cfg_.obs_dim;
    const int na = cfg_.action_dim;
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd obs(no, n);
    for (Eigen::Index j = 0; j < n; ++j) obs.col(j) = batch[j]->obs;
    PolicyPass pp = sample_policy(obs, nullptr);
    Eigen::MatrixXd actor_in(no + na, n);
    actor_in << obs, pp.a;
    Eigen::RowVectorXd q1 = critic1_.forward(actor_in).row(0);
    Eigen::RowVectorXd q2 = critic2_.forward(actor_in).row(0);
    return (temperature() * pp.log_prob - q1.cwiseMin(q2)).mean();
}

void Agent::soft_update(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("soft_update: tau must lie in [0,1]");
    for (std::size_t i = 0; i < critic1_.layer_count(); ++i) {
        target1_.layer(i).W = (1.0 - tau) * target1_.layer(i).W + tau * critic1_.layer(i).W;
        target1_.layer(i).b = (1.0 - tau) * target1_.layer(i).b + tau * critic1_.layer(i).b;
        target2_.layer(i).W = (1.0 - tau) * target2_.layer(i).W + tau * critic2_.layer(i).W;
        target2_.layer(i).b = (1.0 - tau) * target2_.layer(i).b + tau * critic2_.layer(i).b;
    }
}

void Agent::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    const std::int32_t version = 1;
    write_raw(os, &version, sizeof version);
    const std::int32_t dims[4] = {cfg_.obs_dim, cfg_.action_dim, cfg_.hidden_layers, cfg_.hidden_nodes};
    write_raw(os, dims, sizeof dims);
    write_f64(os, cfg_.lr);
    write_f64(os, cfg_.discount);
    write_f64(os, cfg_.tau_learn);
    write_f64(os, cfg_.reward_scale);
    const std::int32_t auto_ent = cfg_.auto_entropy ? 1 : 0;
    write_raw(os, &auto_ent, sizeof auto_ent);
    const double bounds[6] = {cfg_.bounds.c_act.lo, cfg_.bounds.c_act.hi,
                              cfg_.bounds.b_act.lo, cfg_.bounds.b_act.hi,
                              cfg_.bounds.n.lo, cfg_.bounds.n.hi};
    write_raw(os, bounds, sizeof bounds);
    write_f64(os, log_alpha_);
    write_f64(os, target_entropy_);
    write_i64(os, updates_);
    actor_.save(os);
    critic1_.save(os);
    critic2_.save(os);
    target1_.save(os);
    target2_.save(os);
    opt_actor_.save(os);
    opt_critic1_.save(os);
    opt_critic2_.save(os);
    opt_alpha_.save(os);
    if (!os) throw IoError("short write while saving checkpoint: " + path);
}

Agent Agent::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    read_raw(is, magic, sizeof magic);
    if (std::string(magic, 8) != std::string(kMagic, 8)) {
        throw IoError("bad checkpoint magic in " + path);
    }
    std::int32_t version = 0;
    read_raw(is, &version, sizeof version);
    if (version != 1) throw IoError("unsupported checkpoint version in " + path);

    Agent a;
    std::int32_t dims[4];
    read_raw(is, dims, sizeof dims);
    a.cfg_.obs_dim = dims[0];
    a.cfg_.action_dim = dims[1];
    a.cfg_.hidden_layers = dims[2];
    a.cfg_.hidden_nodes = dims[3];
    a.cfg_.lr = read_f64(is);
    a.cfg_.discount = read_f64(is);
    a.cfg_.tau_learn = read_f64(is);
    a.cfg_.reward_scale = read_f64(is);
    std::int32_t auto_ent = 0;
    read_raw(is, &auto_ent, sizeof auto_ent);
    a.cfg_.auto_entropy = auto_ent != 0;
    double bounds[6];
    read_raw(is, bounds, sizeof bounds);
    a.cfg_.bounds.c_act = {bounds[0], bounds[1]};
    a.cfg_.bounds.b_act = {bounds[2], bounds[3]};
    a.cfg_.bounds.n = {bounds[4], bounds[5]};
    a.log_alpha_ = read_f64(is);
    a.target_entropy_ = read_f64(is);
    a.updates_ = read_i64(is);
    a.actor_ = Network::load(is);
    a.critic1_ = Network::load(is);
    a.critic2_ = Network::load(is);
    a.target1_ = Network::load(is);
    a.target2_ = Network::load(is);
    a.opt_actor_ = AdamState::load(is, a.actor_);
    a.opt_critic1_ = AdamState::load(is, a.critic1_);
    a.opt_critic2_ = AdamState::load(is, a.critic2_);
    a.opt_alpha_ = ScalarAdam::load(is);
    a.rng_ = std::mt19937_64(mix_seed(0x9d2c5680, static_cast<std::uint64_t>(a.updates_)));
    return a;
}

bool operator==(const Agent& a, const Agent& b) {
    return a.log_alpha_ == b.log_alpha_ && a.updates_ == b.updates_ &&
           a.actor_ == b.actor_ && a.critic1_ == b.critic1_ && a.critic2_ == b.critic2_ &&
           a.target1_ == b.target1_ && a.target2_ == b.target2_ &&
           a.opt_actor_ == b.opt_actor_ && a.opt_critic1_ == b.opt_critic1_ &&
           a.opt_critic2_ == b.opt_critic2_ && a.opt_alpha_ == b.opt_alpha_;
}

} // namespace mflab
