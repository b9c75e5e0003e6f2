#include "mflab/neural.hpp"
#include "mflab/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace mflab {

namespace {

void write_raw(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw IoError("checkpoint stream truncated");
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    const std::int64_t rows = m.rows(), cols = m.cols();
    write_raw(os, &rows, sizeof rows);
    write_raw(os, &cols, sizeof cols);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) {
            const double v = m(r, c);
            write_raw(os, &v, sizeof v);
        }
}

Eigen::MatrixXd read_matrix(std::istream& is) {
    std::int64_t rows = 0, cols = 0;
    read_raw(is, &rows, sizeof rows);
    read_raw(is, &cols, sizeof cols);
    if (rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24)) {
        throw IoError("checkpoint matrix header corrupt");
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) {
            double v;
            read_raw(is, &v, sizeof v);
            m(r, c) = v;
        }
    return m;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    write_matrix(os, v);
}

Eigen::VectorXd read_vector(std::istream& is) {
    Eigen::MatrixXd m = read_matrix(is);
    if (m.cols() != 1) throw IoError("checkpoint vector header corrupt");
    return m.col(0);
}

} // namespace

Network::Network(const std::vector<int>& dims, std::mt19937_64& rng) {
    if (dims.size() < 3) {
        throw ConfigError("Network: need at least one hidden layer");
    }
    for (int d : dims) {
        if (d <= 0) throw ConfigError("Network: zero-dimension layer");
    }
    layers_.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        const int fan_in = dims[i];
        const int fan_out = dims[i + 1];
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-limit, limit);
        l.W.resize(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) l.W(r, c) = u(rng);
        l.b = Eigen::VectorXd::Zero(fan_out);
        l.act = (i + 2 == dims.size()) ? Activation::Identity : Activation::Rectifier;
        layers_.push_back(std::move(l));
    }
}

Network Network::from_layers(std::vector<Layer> layers) {
    if (layers.empty()) throw ConfigError("Network::from_layers: no layers");
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        if (layers[i].W.rows() != layers[i + 1].W.cols()) {
            throw ConfigError("Network::from_layers: layer dimensions do not chain");
        }
    }
    Network net;
    net.layers_ = std::move(layers);
    return net;
}

std::vector<int> Network::dims() const {
    std::vector<int> d;
    if (layers_.empty()) return d;
    d.push_back(static_cast<int>(layers_.front().W.cols()));
    for (const Layer& l : layers_) d.push_back(static_cast<int>(l.W.rows()));
    return d;
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& x) const {
    return forward(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& X) const {
    if (X.rows() != input_dim()) throw std::invalid_argument("Network::forward: input dimension mismatch");
    Eigen::MatrixXd h = X;
    for (const Layer& l : layers_) {
        Eigen::MatrixXd pre = (l.W * h).colwise() + l.b;
        if (l.act == Activation::Rectifier) {
            h = pre.cwiseMax(0.0);
        } else {
            h = std::move(pre);
        }
    }
    return h;
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& X, Cache& cache) const {
    if (X.rows() != input_dim()) throw std::invalid_argument("Network::forward: input dimension mismatch");
    cache.input = X;
    cache.pre.resize(layers_.size());
    cache.post.resize(layers_.size());
    const Eigen::MatrixXd* h = &cache.input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        cache.pre[i] = (l.W * (*h)).colwise() + l.b;
        if (l.act == Activation::Rectifier) {
            cache.post[i] = cache.pre[i].cwiseMax(0.0);
        } else {
            cache.post[i] = cache.pre[i];
        }
        h = &cache.post[i];
    }
    return cache.post.back();
}

Network::Gradients Network::zero_gradients() const {
    Gradients g;
    g.dW.reserve(layers_.size());
    g.db.reserve(layers_.size());
    for (const Layer& l : layers_) {
        g.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
        g.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    return g;
}

Eigen::MatrixXd Network::backward(const Cache& cache, const Eigen::MatrixXd& grad_out,
                                  Gradients& grads) const {
    if (cache.pre.size() != layers_.size() || grad_out.rows() != output_dim() ||
        grad_out.cols() != cache.input.cols()) {
        throw std::invalid_argument("Network::backward: cache does not match this network/input");
    }
    Eigen::MatrixXd delta = grad_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const Layer& l = layers_[k];
        if (l.act == Activation::Rectifier) {
            delta = delta.cwiseProduct((cache.pre[k].array() > 0.0).cast<double>().matrix());
        }
        const Eigen::MatrixXd& below = (k == 0) ? cache.input : cache.post[k - 1];
        grads.dW[k].noalias() += delta * below.transpose();
        grads.db[k] += delta.rowwise().sum();
        if (k > 0) {
            delta = l.W.transpose() * delta;
        } else {
            return l.W.transpose() * delta;
        }
    }
    return Eigen::MatrixXd::Zero(input_dim(), cache.input.cols());
}

void Network::save(std::ostream& os) const {
    const std::int64_t n = static_cast<std::int64_t>(layers_.size());
    write_raw(os, &n, sizeof n);
    for (const Layer& l : layers_) {
        const std::int32_t act = (l.act == Activation::Rectifier) ? 0 : 1;
        write_raw(os, &act, sizeof act);
        write_matrix(os, l.W);
        write_vector(os, l.b);
    }
}

Network Network::load(std::istream& is) {
    std::int64_t n = 0;
    read_raw(is, &n, sizeof n);
    if (n <= 0 || n > 1024) throw IoError("network header corrupt");
    Network net;
    net.layers_.resize(static_cast<std::size_t>(n));
    for (Layer& l : net.layers_) {
        std::int32_t act = 0;
        read_raw(is, &act, sizeof act);
        if (act != 0 && act != 1) throw IoError("network activation tag corrupt");
        l.act = (act == 0) ? Activation::Rectifier : Activation::Identity;
        l.W = read_matrix(is);
        l.b = read_vector(is);
        if (l.W.rows() != l.b.size()) throw IoError("network layer shape corrupt");
    }
    return net;
}

bool operator==(const Network& a, const Network& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        if (a.layers_[i].act != b.layers_[i].act) return false;
        if (a.layers_[i].W != b.layers_[i].W) return false;
        if (a.layers_[i].b != b.layers_[i].b) return false;
    }
    return true;
}

AdamState::AdamState(const Network& net, AdamConfig cfg) : cfg_(cfg) {
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const auto& l = net.layer(i);
        mW_.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
        vW_.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
        mb_.push_back(Eigen::VectorXd::Zero(l.b.size()));
        vb_.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
}

void AdamState::step(Network& net, const Network::Gradients& grads) {
    if (grads.dW.size() != mW_.size()) {
        throw std::invalid_argument("AdamState::step: gradient shapes do not match");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < mW_.size(); ++i) {
        auto& l = net.layer(i);
        mW_[i] = cfg_.beta1 * mW_[i] + (1.0 - cfg_.beta1) * grads.dW[i];
        vW_[i] = cfg_.beta2 * vW_[i] + (1.0 - cfg_.beta2) * grads.dW[i].cwiseProduct(grads.dW[i]);
        l.W.array() -= cfg_.lr * (mW_[i].array() / bc1) / ((vW_[i].array() / bc2).sqrt() + cfg_.eps);
        mb_[i] = cfg_.beta1 * mb_[i] + (1.0 - cfg_.beta1) * grads.db[i];
        vb_[i] = cfg_.beta2 * vb_[i] + (1.0 - cfg_.beta2) * grads.db[i].cwiseProduct(grads.db[i]);
        l.b.array() -= cfg_.lr * (mb_[i].array() / bc1) / ((vb_[i].array() / bc2).sqrt() + cfg_.eps);
    }
}

void AdamState::save(std::ostream& os) const {
    write_raw(os, &cfg_, sizeof cfg_);
    write_raw(os, &t_, sizeof t_);
    const std::int64_t n = static_cast<std::int64_t>(mW_.size());
    write_raw(os, &n, sizeof n);
    for (std::size_t i = 0; i < mW_.size(); ++i) {
        write_matrix(os, mW_[i]);
        write_matrix(os, vW_[i]);
        write_vector(os, mb_[i]);
        write_vector(os, vb_[i]);
    }
}

AdamState AdamState::load(std::istream& is, const Network& shape_ref) {
    AdamState st;
    read_raw(is, &st.cfg_, sizeof st.cfg_);
    read_raw(is, &st.t_, sizeof st.t_);
    std::int64_t n = 0;
    read_raw(is, &n, sizeof n);
    if (n != static_cast<std::int64_t>(shape_ref.layer_count())) {
        throw IoError("optimizer state does not match network shape");
    }
    for (std::int64_t i = 0; i < n; ++i) {
        st.mW_.push_back(read_matrix(is));
        st.vW_.push_back(read_matrix(is));
        st.mb_.push_back(read_vector(is));
        st.vb_.push_back(read_vector(is));
    }
    return st;
}

bool operator==(const AdamState& a, const AdamState& b) {
    if (a.t_ != b.t_ || a.mW_.size() != b.mW_.size()) return false;
    if (a.cfg_.lr != b.cfg_.lr || a.cfg_.beta1 != b.cfg_.beta1 ||
        a.cfg_.beta2 != b.cfg_.beta2 || a.cfg_.eps != b.cfg_.eps) return false;
    for (std::size_t i = 0; i < a.mW_.size(); ++i) {
        if (a.mW_[i] != b.mW_[i] || a.vW_[i] != b.vW_[i]) return false;
        if (a.mb_[i] != b.mb_[i] || a.vb_[i] != b.vb_[i]) return false;
    }
    return true;
}

double ScalarAdam::step(double value, double grad) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad * grad;
    const double mhat = m_ / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const double vhat = v_ / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    return value - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
}

void ScalarAdam::save(std::ostream& os) const {
    write_raw(os, &cfg_, sizeof cfg_);
    write_raw(os, &t_, sizeof t_);
    write_raw(os, &m_, sizeof m_);
    write_raw(os, &v_, sizeof v_);
}

ScalarAdam ScalarAdam::load(std::istream& is) {
    ScalarAdam st;
    read_raw(is, &st.cfg_, sizeof st.cfg_);
    read_raw(is, &st.t_, sizeof st.t_);
    read_raw(is, &st.m_, sizeof st.m_);
    read_raw(is, &st.v_, sizeof st.v_);
    return st;
}

bool operator==(const ScalarAdam& a, const ScalarAdam& b) {
    return a.t_ == b.t_ && a.m_ == b.m_ && a.v_ == b.v_ && a.cfg_.lr == b.cfg_.lr;
}

} // namespace mflab
