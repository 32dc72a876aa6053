#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "averl/mdp.hpp"

namespace averl {

/// Average-optimal solution: gain (long-run reward per step), bias vector
/// normalized to bias[ref_state] = 0, and the greedy policy.
struct GainBias {
    double gain = 0.0;
    Eigen::VectorXd bias;
    Policy policy;
    int iterations = 0;
    double residual = 0.0;   // final span of successive value differences
};

struct DiscountedSolution {
    Eigen::VectorXd values;
    Policy policy;
    double gamma = 0.0;
    int iterations = 0;
    double residual = 0.0;   // sup-norm Bellman residual at the returned values
};

/// Long-run average reward of a policy: mu . r_pi over the induced chain.
/// Independent of any initial state; throws NotUnichainError when the
/// chain has several recurrent classes.
double average_reward(const TabularMdp& mdp, const Policy& policy);

/// Exact discounted policy evaluation: solves (I - gamma P_pi) V = r_pi.
Eigen::VectorXd discounted_values(const TabularMdp& mdp, const Policy& policy, double gamma);

/// |sum_s mu(s) V(s) - avg_reward / (1 - gamma)|. Zero in exact arithmetic
/// for every unichain policy; callers assert it below a relative tolerance.
double identity_residual(const TabularMdp& mdp, const Policy& policy, double gamma);

/// Value iteration for the discounted criterion. Stops when the sup-norm
/// Bellman residual is at most tol; greedy ties break to the lowest action
/// index.
DiscountedSolution discounted_value_iteration(const TabularMdp& mdp, double gamma, double tol,
                                              int max_iters = 2'000'000);

/// Relative value iteration for the average criterion with a fixed
/// reference state. Stopping rule: span of successive value differences
/// <= tol. Throws ConvergenceError (carrying the last span) past
/// max_iters and NotUnichainError if the final greedy chain is not
/// unichain.
GainBias relative_value_iteration(const TabularMdp& mdp, int ref_state, double tol,
                                  int max_iters = 1'000'000);

/// Exhaustive argmax of average_reward over all deterministic policies;
/// ties keep the lexicographically first action tuple. The independent
/// oracle the iterative solvers are checked against.
std::pair<Policy, double> brute_force_gain_optimal(const TabularMdp& mdp,
                                                   std::uint64_t cap = kDefaultPolicyCap);

/// For each gamma, the worst-state deviation
/// max_s |(1-gamma) V_gamma(s) - avg_reward|, which vanishes as gamma -> 1.
std::vector<std::pair<double, double>> abel_limit_profile(const TabularMdp& mdp,
                                                          const Policy& policy,
                                                          const std::vector<double>& gammas);

}  // namespace averl
