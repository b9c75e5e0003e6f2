#pragma once
#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace mflab {

enum class Activation { Rectifier, Identity };

/// Dense feed-forward network over 64-bit floats. Value-like: copyable,
/// comparable layer by layer, no shared state.
class Network {
public:
    struct Layer {
        Eigen::MatrixXd W; ///< (out x in)
        Eigen::VectorXd b;
        Activation act;
    };

    /// Forward-pass intermediates retained for backward(). Valid only for
    /// the network instance and input that produced it.
    struct Cache {
        Eigen::MatrixXd input;              ///< (in x batch)
        std::vector<Eigen::MatrixXd> pre;   ///< pre-activations per layer
        std::vector<Eigen::MatrixXd> post;  ///< activations per layer
    };

    struct Gradients {
        std::vector<Eigen::MatrixXd> dW;
        std::vector<Eigen::VectorXd> db;
    };

    Network() = default;

    /// Hidden layers use the rectifier, the output layer is affine. Weights
    /// are drawn uniform within +-1/sqrt(fan_in), biases start at zero.
    /// Throws ConfigError for fewer than one hidden layer or a zero width.
    Network(const std::vector<int>& dims, std::mt19937_64& rng);

    /// Assembles a network from explicit layers (shapes must chain).
    static Network from_layers(std::vector<Layer> layers);

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Cache& cache) const;

    /// Exact reverse-mode gradients of sum(output .* grad_out) with respect
    /// to every parameter (accumulated into grads) and the input (returned).
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out,
                             Gradients& grads) const;

    Gradients zero_gradients() const;

    int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().W.cols()); }
    int output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().W.rows()); }
    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return layers_[i]; }
    const Layer& layer(std::size_t i) const { return layers_[i]; }
    std::vector<int> dims() const;

    void save(std::ostream& os) const;
    static Network load(std::istream& is);

    friend bool operator==(const Network& a, const Network& b);

private:
    std::vector<Layer> layers_;
};

struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second-moment accumulators shaped like one network's parameters.
class AdamState {
public:
    AdamState() = default;
    AdamState(const Network& net, AdamConfig cfg);

    /// One bias-corrected adaptive moment update applied in place.
    void step(Network& net, const Network::Gradients& grads);

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    void save(std::ostream& os) const;
    static AdamState load(std::istream& is, const Network& shape_ref);

    friend bool operator==(const AdamState& a, const AdamState& b);

private:
    AdamConfig cfg_{};
    long t_ = 0;
    std::vector<Eigen::MatrixXd> mW_, vW_;
    std::vector<Eigen::VectorXd> mb_, vb_;
};

/// Scalar Adam, used for the entropy temperature.
class ScalarAdam {
public:
    ScalarAdam() = default;
    explicit ScalarAdam(AdamConfig cfg) : cfg_(cfg) {}
    double step(double value, double grad);
    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    void save(std::ostream& os) const;
    static ScalarAdam load(std::istream& is);
    friend bool operator==(const ScalarAdam& a, const ScalarAdam& b);

private:
    AdamConfig cfg_{};
    long t_ = 0;
    double m_ = 0.0;
    double v_ = 0.0;
};

} // namespace mflab
