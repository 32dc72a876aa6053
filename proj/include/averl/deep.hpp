#pragma once

#include <string>
#include <vector>

#include "averl/env.hpp"
#include "averl/net.hpp"
#include "averl/record.hpp"

namespace averl {

/// One observed interaction, stored as encoded features.
struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
};

/// Fixed-capacity ring of transitions with uniform batch sampling (without
/// replacement within a batch).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_[i]; }

    std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

enum class DeepAgentKind { Ddr, Ddrviq, Ddqn };

DeepAgentKind deep_agent_from_name(const std::string& name);

struct DeepAgentConfig {
    std::vector<int> hidden = {64, 64};
    double lr = 1e-3;
    std::string optimizer = "adam";   // or "sgd"
    double gamma = 0.99;              // discounted baseline only
    double alpha_u = 0.01;            // DDR average-reward rate
    int batch_size = 32;
    std::size_t buffer_capacity = 10'000;
    long long target_sync_every = 200;
    double epsilon = 1.0;             // schedule start
    double epsilon_final = 0.05;
    long long epsilon_anneal_steps = 5'000;
    long long steps = 20'000;
    long long eval_every = 1'000;
    long long eval_horizon = 2'000;
    long long eval_burnin = 200;
    std::uint64_t seed = 0;
    std::vector<double> ref_features;   // DDRVIQ; fixed for the whole run
    int ref_state = 0;                  // DDRVIQ fallback, encoded via the env
    std::string checkpoint_out;         // optional final parameter dump
    std::string checkpoint_in;          // optional warm start

    void check() const;
    double epsilon_at(long long step) const;
};

/// DDR value step: regresses the online network toward
/// y_i = u_i - u_tilde + max_a' R_target(s'_i, a') over the batch. Returns
/// the batch loss.
double ddr_value_step(NetworkParameters& online, const NetworkParameters& target,
                      double u_tilde, const std::vector<Transition>& batch, Optimizer& opt);

/// DDR average-reward step: u_tilde += alpha_u * mean_i(u_i
/// + max_a' R_target(s'_i, a') - R_target(s_i, a_i) - u_tilde). No greedy
/// gate, and every bracketed term reads the target network, so the result
/// is independent of the online parameters.
void ddr_average_reward_step(const NetworkParameters& target, double& u_tilde,
                             const std::vector<Transition>& batch, double alpha_u);

/// Both DDR phases in order: value step first, then the average-reward
/// step. Returns (loss, updated u_tilde).
std::pair<double, double> ddr_learn_batch(NetworkParameters& online,
                                          const NetworkParameters& target, double u_tilde,
                                          const std::vector<Transition>& batch, double alpha_u,
                                          Optimizer& opt);

/// Deep RVI Q-learning step: y_i = u_i + max_a' Q_target(s'_i, a')
/// - max_b Q_target(ref_features, b).
double ddrviq_learn_batch(NetworkParameters& online, const NetworkParameters& target,
                          const std::vector<double>& ref_features,
                          const std::vector<Transition>& batch, Optimizer& opt);

/// Discounted baseline: y_i = u_i + gamma * max_a' Q_target(s'_i, a').
double dqn_learn_batch(NetworkParameters& online, const NetworkParameters& target, double gamma,
                       const std::vector<Transition>& batch, Optimizer& opt);

/// Epsilon-greedy over the network's action values.
int act(const NetworkParameters& params, const std::vector<double>& features, double epsilon,
        Rng& rng);

/// Empirical average reward of the greedy policy over `horizon` steps,
/// discarding the first `burnin`. Deterministic given the env seed.
double evaluate_policy(const NetworkParameters& params, Env& env, long long horizon,
                       long long burnin, std::uint64_t seed);

/// Full training loop for one deep agent; bit-reproducible given the
/// config. One gradient step per environment step once the buffer holds a
/// batch; hard target sync every target_sync_every steps.
RunRecord train_deep(DeepAgentKind kind, Env& env, const DeepAgentConfig& config);

}  // namespace averl
