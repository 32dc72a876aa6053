#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "averl/errors.hpp"

namespace averl {

/// One entry of the transition-reward kernel: performing an action may land
/// in next_state with this reward, with probability prob.
struct Outcome {
    int next_state = 0;
    double reward = 0.0;
    double prob = 0.0;
};

/// Finite MDP given by its kernel p(s', u | s, a), stored per (state,
/// action) as a list of outcomes. Immutable after construction; all solver
/// math reads this structure.
class TabularMdp {
public:
    using Kernel = std::vector<std::vector<std::vector<Outcome>>>;

    /// kernel must be shaped [num_states][num_actions]. Sizes are enforced
    /// here; probabilistic well-formedness is checked by validate().
    TabularMdp(int num_states, int num_actions, Kernel kernel);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    const std::vector<Outcome>& outcomes(int s, int a) const {
        return kernel_[s][a];
    }

    /// Expected one-step reward of (s, a): sum over outcomes of prob * reward.
    double expected_reward(int s, int a) const;

    /// Marginal transition probability p(s_next | s, a), summing the kernel
    /// over rewards.
    double transition_prob(int s, int a, int s_next) const;

private:
    int num_states_;
    int num_actions_;
    Kernel kernel_;
};

/// Row-stochastic action distribution per state. Deterministic policies are
/// one-hot rows.
class Policy {
public:
    Policy(Eigen::MatrixXd probs);

    static Policy deterministic(const std::vector<int>& actions, int num_actions);
    static Policy uniform(int num_states, int num_actions);

    int num_states() const { return static_cast<int>(probs_.rows()); }
    int num_actions() const { return static_cast<int>(probs_.cols()); }
    double prob(int s, int a) const { return probs_(s, a); }
    const Eigen::MatrixXd& probs() const { return probs_; }

    /// For one-hot rows, the action per state; throws ContractError if any
    /// row is not one-hot.
    std::vector<int> actions() const;

    bool operator==(const Policy& other) const { return probs_ == other.probs_; }

private:
    Eigen::MatrixXd probs_;
};

struct InducedChain {
    Eigen::MatrixXd transition;   // row = source state, row-stochastic
    Eigen::VectorXd reward;       // expected one-step reward per state
};

/// Checks every TabularMdp invariant and reports each violation as one
/// line naming the offending (s, a). Empty report == valid.
std::vector<std::string> validate(const TabularMdp& mdp);

/// Collapses the MDP under a policy into the state chain it induces:
/// transition[s][s'] = sum_a pi(a|s) p(s'|s,a) and the expected reward
/// vector. Throws ContractError on dimension mismatch.
InducedChain induced_chain(const TabularMdp& mdp, const Policy& policy);

/// Unique stationary distribution of a row-stochastic matrix, solved as a
/// linear system with one balance equation replaced by normalization.
/// Throws NotUnichainError when the system is singular (more than one
/// recurrent class).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

/// True iff the policy-induced chain has exactly one recurrent
/// communicating class (transient states allowed). Exact analysis on the
/// support graph via strongly connected components.
bool is_unichain(const TabularMdp& mdp, const Policy& policy);

/// Number of closed (recurrent) strongly connected classes of a support
/// graph given as adjacency lists.
int count_recurrent_classes(const std::vector<std::vector<int>>& adjacency);

inline constexpr std::uint64_t kDefaultPolicyCap = 1'000'000;

/// Lazy enumeration of all deterministic policies in lexicographic order of
/// their action tuples. Construction throws CapExceededError, naming the
/// count, when num_actions^num_states exceeds the cap.
class DetPolicyEnumerator {
public:
    DetPolicyEnumerator(const TabularMdp& mdp, std::uint64_t cap = kDefaultPolicyCap);

    std::uint64_t count() const { return count_; }

    /// Writes the next action tuple; returns false when exhausted.
    bool next(std::vector<int>& actions);

private:
    int num_states_;
    int num_actions_;
    std::uint64_t count_;
    std::vector<int> current_;
    bool started_ = false;
    bool done_ = false;
};

/// Materializes the full enumeration (small MDPs only).
std::vector<Policy> enumerate_det_policies(const TabularMdp& mdp,
                                           std::uint64_t cap = kDefaultPolicyCap);

}  // namespace averl
