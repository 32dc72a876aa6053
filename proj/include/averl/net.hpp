#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "averl/rng.hpp"

namespace averl {

struct DenseLayer {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

/// Dueling feedforward approximator: a shared rectified-linear trunk feeding
/// a scalar value head and a per-action advantage head, recombined as
/// q = v + A - mean(A). Plain value type; copying one is the target-network
/// sync primitive.
struct NetworkParameters {
    int input_dim = 0;
    int num_actions = 0;
    std::vector<DenseLayer> trunk;
    DenseLayer value_head;   // 1 x trunk_out
    DenseLayer adv_head;     // num_actions x trunk_out

    static NetworkParameters zeros(int input_dim, int num_actions,
                                   const std::vector<int>& hidden);
    /// Uniform fan-in initialization of weights (biases zero), seeded.
    static NetworkParameters randomized(int input_dim, int num_actions,
                                        const std::vector<int>& hidden, Rng& rng);

    bool same_shape(const NetworkParameters& other) const;
};

/// One gradient tensor per parameter tensor, shape-congruent with its
/// source network.
struct GradientSet {
    std::vector<DenseLayer> trunk;
    DenseLayer value_head;
    DenseLayer adv_head;

    static GradientSet zeros_like(const NetworkParameters& params);
};

template <class Net, class F>
void for_each_tensor(Net& net, F&& f) {
    for (auto& layer : net.trunk) {
        f(layer.w);
        f(layer.b);
    }
    f(net.value_head.w);
    f(net.value_head.b);
    f(net.adv_head.w);
    f(net.adv_head.b);
}

template <class NetA, class NetB, class F>
void for_each_tensor_pair(NetA& a, NetB& b, F&& f) {
    for (std::size_t i = 0; i < a.trunk.size(); ++i) {
        f(a.trunk[i].w, b.trunk[i].w);
        f(a.trunk[i].b, b.trunk[i].b);
    }
    f(a.value_head.w, b.value_head.w);
    f(a.value_head.b, b.value_head.b);
    f(a.adv_head.w, b.adv_head.w);
    f(a.adv_head.b, b.adv_head.b);
}

/// Action values for a single feature vector.
Eigen::VectorXd forward(const NetworkParameters& params, const Eigen::VectorXd& features);

/// Batched forward pass; features and the result hold one sample per column.
Eigen::MatrixXd forward_batch(const NetworkParameters& params, const Eigen::MatrixXd& features);

struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
};

/// Loss 0.5 * (q[action] - target)^2 with exact analytic gradients for
/// every parameter tensor.
BackwardResult backward(const NetworkParameters& params, const Eigen::VectorXd& features,
                        int action, double target);

/// Mean over the batch of the per-sample losses above; grads receive the
/// averaged gradients. Returns the batch loss.
double backward_batch(const NetworkParameters& params, const Eigen::MatrixXd& features,
                      const std::vector<int>& actions, const Eigen::VectorXd& targets,
                      GradientSet& grads);

/// SGD (p -= lr * g) by default; the adaptive variant keeps first/second
/// moment estimates with bias correction.
class Optimizer {
public:
    enum class Kind { Sgd, Adam };

    explicit Optimizer(Kind kind = Kind::Sgd, double lr = 0.01);

    void step(NetworkParameters& params, const GradientSet& grads);

    Kind kind() const { return kind_; }
    double learning_rate() const { return lr_; }

private:
    Kind kind_;
    double lr_;
    long long t_ = 0;
    bool state_ready_ = false;
    GradientSet m_;
    GradientSet v_;
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
};

/// Target-network sync: a value copy whose outputs stay frozen while the
/// online network keeps training.
inline NetworkParameters sync_target(const NetworkParameters& online) { return online; }

/// Versioned JSON tensor dump with shape headers; round-trips bit-exactly.
std::string params_to_json(const NetworkParameters& params);
NetworkParameters params_from_json(const std::string& text);
void save_params(const NetworkParameters& params, const std::string& path);
NetworkParameters load_params(const std::string& path);

}  // namespace averl
