#pragma once

#include <Eigen/Dense>
#include <string>

#include "averl/env.hpp"
#include "averl/record.hpp"
#include "averl/rng.hpp"

namespace averl {

/// Learned quantities of a tabular agent: the action-value table plus the
/// scalar average-reward estimate tracked by R-learning.
struct ValueStore {
    Eigen::MatrixXd table;   // num_states x num_actions
    double u_tilde = 0.0;

    static ValueStore zeros(int num_states, int num_actions) {
        return ValueStore{Eigen::MatrixXd::Zero(num_states, num_actions), 0.0};
    }

    /// Greedy action for a state, lowest index on ties.
    int greedy_action(int s) const;
    std::vector<int> greedy_actions() const;
};

enum class TabularAgentKind { DiscountedQ, RviQ, RLearning };

TabularAgentKind tabular_agent_from_name(const std::string& name);

struct LearningConfig {
    double alpha = 0.1;         // value learning rate
    double alpha_u = 0.01;      // average-reward learning rate (R-learning)
    double epsilon = 0.1;       // exploration
    double gamma = 0.99;        // discounted baseline only
    int ref_state = 0;          // RVI Q-learning only
    long long steps = 100'000;
    long long eval_every = 5'000;
    long long eval_len = 10'000;      // evaluation rollout length
    long long eval_burnin = 0;
    std::uint64_t seed = 0;
    // optional linear schedules; a 0 horizon means constant
    double epsilon_final = -1.0;      // <0: keep epsilon constant
    long long epsilon_anneal_steps = 0;
    double alpha_final = -1.0;
    long long alpha_anneal_steps = 0;

    void check() const;
    double epsilon_at(long long step) const;
    double alpha_at(long long step) const;
};

/// Epsilon-greedy draw over one table row: with probability epsilon a
/// uniform action, otherwise the greedy one (lowest index on ties).
int epsilon_greedy(const Eigen::VectorXd& q_row, double epsilon, Rng& rng);

/// Discounted Q-learning step (the baseline the average-reward learners are
/// contrasted with): Q(s,a) += alpha * (u + gamma max_a' Q(s',a') - Q(s,a)).
void q_learning_update(ValueStore& store, int s, int a, double u, int s_next, double gamma,
                       double alpha);

/// RVI Q-learning step with a fixed reference state:
/// Q(s,a) += alpha * (u + max_a' Q(s',a') - max_b Q(ref,b) - Q(s,a)).
void rvi_q_update(ValueStore& store, int s, int a, double u, int s_next, int ref_state,
                  double alpha);

/// R-learning value step: R(s,a) += alpha_r * (u - u_tilde
/// + max_a' R(s',a') - R(s,a)). Leaves u_tilde untouched.
void r_learning_update(ValueStore& store, int s, int a, double u, int s_next, double alpha_r);

/// R-learning average-reward step. Must run directly after
/// r_learning_update on the same transition: u_tilde moves only when the
/// freshly updated R(s,a) equals its row maximum (ties pass), by
/// alpha_u * (u + max_a' R(s',a') - R(s,a) - u_tilde).
void r_learning_avg_update(ValueStore& store, int s, int a, double u, int s_next, double alpha_u);

/// Runs `steps` epsilon-greedy interactions of the chosen agent on the
/// environment, evaluating the frozen greedy policy every eval_every steps.
/// Bit-reproducible for a fixed (config, env) pair.
RunRecord train_tabular(TabularAgentKind kind, Env& env, const LearningConfig& config);

/// Empirical average reward of a fixed deterministic policy over a rollout.
double evaluate_greedy_policy(const std::vector<int>& actions, Env& env, long long length,
                              long long burnin, std::uint64_t seed);

}  // namespace averl
