#include "averl/solvers.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace averl {

namespace {

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ContractError("gamma must lie in [0, 1), got " + std::to_string(gamma));
}

// Q-factors for a value estimate: q(s,a) = r(s,a) + weight * sum p(s'|s,a) v(s').
Eigen::MatrixXd q_factors(const TabularMdp& mdp, const Eigen::VectorXd& v, double weight) {
    Eigen::MatrixXd q(mdp.num_states(), mdp.num_actions());
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a) {
            double x = 0.0;
            for (const Outcome& o : mdp.outcomes(s, a))
                x += o.prob * (o.reward + weight * v(o.next_state));
            q(s, a) = x;
        }
    return q;
}

// max over actions with lowest-index tie-break
void greedy_rows(const Eigen::MatrixXd& q, Eigen::VectorXd& value, std::vector<int>& action) {
    value.resize(q.rows());
    action.assign(q.rows(), 0);
    for (int s = 0; s < q.rows(); ++s) {
        int best = 0;
        for (int a = 1; a < q.cols(); ++a)
            if (q(s, a) > q(s, best)) best = a;
        value(s) = q(s, best);
        action[s] = best;
    }
}

}  // namespace

double average_reward(const TabularMdp& mdp, const Policy& policy) {
    const InducedChain chain = induced_chain(mdp, policy);
    const Eigen::VectorXd mu = stationary_distribution(chain.transition);
    return mu.dot(chain.reward);
}

Eigen::VectorXd discounted_values(const TabularMdp& mdp, const Policy& policy, double gamma) {
    check_gamma(gamma);
    const InducedChain chain = induced_chain(mdp, policy);
    const int n = mdp.num_states();
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - gamma * chain.transition;
    return system.partialPivLu().solve(chain.reward);
}

double identity_residual(const TabularMdp& mdp, const Policy& policy, double gamma) {
    check_gamma(gamma);
    const InducedChain chain = induced_chain(mdp, policy);
    const Eigen::VectorXd mu = stationary_distribution(chain.transition);
    const Eigen::VectorXd v = discounted_values(mdp, policy, gamma);
    const double avg = mu.dot(chain.reward);
    return std::abs(mu.dot(v) - avg / (1.0 - gamma));
}

DiscountedSolution discounted_value_iteration(const TabularMdp& mdp, double gamma, double tol,
                                              int max_iters) {
    check_gamma(gamma);
    if (!(tol > 0.0)) throw ContractError("tol must be positive");

    const int n = mdp.num_states();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w;
    std::vector<int> greedy;
    double change = std::numeric_limits<double>::infinity();
    int iters = 0;
    while (iters < max_iters) {
        greedy_rows(q_factors(mdp, v, gamma), w, greedy);
        change = (w - v).cwiseAbs().maxCoeff();
        v = w;
        ++iters;
        // contraction bounds the next residual by gamma * change; the 0.5
        // margin absorbs roundoff at discount factors close to 1
        if (gamma * change <= 0.5 * tol || change == 0.0) break;
    }
    Eigen::VectorXd w2;
    std::vector<int> greedy2;
    greedy_rows(q_factors(mdp, v, gamma), w2, greedy2);
    const double residual = (w2 - v).cwiseAbs().maxCoeff();
    if (residual > tol) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "discounted_value_iteration: residual %.3g above tol %.3g after %d "
                      "iterations",
                      residual, tol, iters);
        throw ConvergenceError(msg, residual);
    }
    DiscountedSolution sol{v, Policy::deterministic(greedy2, mdp.num_actions()), gamma, iters,
                           residual};
    return sol;
}

GainBias relative_value_iteration(const TabularMdp& mdp, int ref_state, double tol,
                                  int max_iters) {
    if (ref_state < 0 || ref_state >= mdp.num_states())
        throw ContractError("relative_value_iteration: ref_state out of range");
    if (!(tol > 0.0)) throw ContractError("tol must be positive");

    // Damped sweeps (aperiodicity transform with self-loop weight 1 - tau)
    // keep the span criterion convergent on periodic chains; the transform
    // preserves gains and greedy policies, and scales the bias by 1 / tau.
    const double tau = 0.5;
    const int n = mdp.num_states();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd target;
    std::vector<int> greedy;
    double span = std::numeric_limits<double>::infinity();
    double gain = 0.0;
    int iters = 0;
    while (iters < max_iters) {
        greedy_rows(q_factors(mdp, v, tau), target, greedy);
        const Eigen::VectorXd increment = (1.0 - tau) * v + target - v;
        const double lo = increment.minCoeff();
        const double hi = increment.maxCoeff();
        span = hi - lo;
        gain = 0.5 * (hi + lo);
        Eigen::VectorXd w = (1.0 - tau) * v + target;
        v = w - Eigen::VectorXd::Constant(n, w(ref_state));
        ++iters;
        if (span <= tol) break;
    }
    if (span > tol)
        throw ConvergenceError("relative_value_iteration: span " + std::to_string(span) +
                                   " above tol after " + std::to_string(iters) + " iterations",
                               span);

    greedy_rows(q_factors(mdp, v, tau), target, greedy);
    Policy policy = Policy::deterministic(greedy, mdp.num_actions());
    if (!is_unichain(mdp, policy))
        throw NotUnichainError("relative_value_iteration: greedy policy induces a "
                               "multichain model");
    GainBias result{gain, v / tau, policy, iters, span};
    return result;
}

std::pair<Policy, double> brute_force_gain_optimal(const TabularMdp& mdp, std::uint64_t cap) {
    DetPolicyEnumerator en(mdp, cap);
    std::vector<int> actions;
    bool have_best = false;
    std::vector<int> best_actions;
    double best_gain = -std::numeric_limits<double>::infinity();
    while (en.next(actions)) {
        const Policy policy = Policy::deterministic(actions, mdp.num_actions());
        const double gain = average_reward(mdp, policy);
        if (!have_best || gain > best_gain) {
            have_best = true;
            best_gain = gain;
            best_actions = actions;
        }
    }
    return {Policy::deterministic(best_actions, mdp.num_actions()), best_gain};
}

std::vector<std::pair<double, double>> abel_limit_profile(const TabularMdp& mdp,
                                                          const Policy& policy,
                                                          const std::vector<double>& gammas) {
    const double avg = average_reward(mdp, policy);
    std::vector<std::pair<double, double>> profile;
    profile.reserve(gammas.size());
    for (double gamma : gammas) {
        const Eigen::VectorXd v = discounted_values(mdp, policy, gamma);
        const double deviation = ((1.0 - gamma) * v.array() - avg).abs().maxCoeff();
        profile.emplace_back(gamma, deviation);
    }
    return profile;
}

}  // namespace averl
