#include "averl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace averl {

namespace {

std::string sa_tag(int s, int a) {
    return "(s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")";
}

}  // namespace

TabularMdp::TabularMdp(int num_states, int num_actions, Kernel kernel)
    : num_states_(num_states), num_actions_(num_actions), kernel_(std::move(kernel)) {
    if (num_states_ <= 0 || num_actions_ <= 0)
        throw ContractError("TabularMdp: num_states and num_actions must be positive");
    if (static_cast<int>(kernel_.size()) != num_states_)
        throw ContractError("TabularMdp: kernel has " + std::to_string(kernel_.size()) +
                            " state rows, expected " + std::to_string(num_states_));
    for (const auto& row : kernel_)
        if (static_cast<int>(row.size()) != num_actions_)
            throw ContractError("TabularMdp: kernel row has " + std::to_string(row.size()) +
                                " action entries, expected " + std::to_string(num_actions_));
}

double TabularMdp::expected_reward(int s, int a) const {
    double r = 0.0;
    for (const Outcome& o : kernel_[s][a]) r += o.prob * o.reward;
    return r;
}

double TabularMdp::transition_prob(int s, int a, int s_next) const {
    double p = 0.0;
    for (const Outcome& o : kernel_[s][a])
        if (o.next_state == s_next) p += o.prob;
    return p;
}

std::vector<std::string> validate(const TabularMdp& mdp) {
    std::vector<std::string> report;
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const auto& outs = mdp.outcomes(s, a);
            if (outs.empty()) {
                report.push_back(sa_tag(s, a) + ": no outcomes");
                continue;
            }
            double total = 0.0;
            for (const Outcome& o : outs) {
                if (o.next_state < 0 || o.next_state >= mdp.num_states())
                    report.push_back(sa_tag(s, a) + ": state index out of range (" +
                                     std::to_string(o.next_state) + ")");
                if (!(o.prob > 0.0 && o.prob <= 1.0))
                    report.push_back(sa_tag(s, a) + ": outcome probability " +
                                     std::to_string(o.prob) + " not in (0,1]");
                if (!std::isfinite(o.reward))
                    report.push_back(sa_tag(s, a) + ": non-finite reward");
                total += o.prob;
            }
            if (std::abs(total - 1.0) > 1e-12) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.12g", total);
                report.push_back(sa_tag(s, a) + ": probabilities sum to " + std::string(buf));
            }
        }
    }
    return report;
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
    if (probs_.rows() < 1 || probs_.cols() < 1)
        throw ContractError("Policy: empty probability matrix");
    for (int s = 0; s < probs_.rows(); ++s) {
        double total = 0.0;
        for (int a = 0; a < probs_.cols(); ++a) {
            if (probs_(s, a) < 0.0)
                throw ContractError("Policy: negative probability at state " + std::to_string(s));
            total += probs_(s, a);
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ContractError("Policy: row " + std::to_string(s) + " sums to " +
                                std::to_string(total));
    }
}

Policy Policy::deterministic(const std::vector<int>& actions, int num_actions) {
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(actions.size(), num_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= num_actions)
            throw ContractError("Policy::deterministic: action index out of range");
        probs(static_cast<int>(s), actions[s]) = 1.0;
    }
    return Policy(std::move(probs));
}

Policy Policy::uniform(int num_states, int num_actions) {
    return Policy(Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions));
}

std::vector<int> Policy::actions() const {
    std::vector<int> result(num_states());
    for (int s = 0; s < num_states(); ++s) {
        int hot = -1;
        for (int a = 0; a < num_actions(); ++a) {
            if (probs_(s, a) == 1.0) hot = a;
            else if (probs_(s, a) != 0.0)
                throw ContractError("Policy::actions: row " + std::to_string(s) +
                                    " is not one-hot");
        }
        if (hot < 0)
            throw ContractError("Policy::actions: row " + std::to_string(s) + " is not one-hot");
        result[s] = hot;
    }
    return result;
}

InducedChain induced_chain(const TabularMdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
        throw ContractError("induced_chain: policy dimensions do not match MDP");
    const int n = mdp.num_states();
    InducedChain chain{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const double pa = policy.prob(s, a);
            if (pa == 0.0) continue;
            for (const Outcome& o : mdp.outcomes(s, a)) {
                chain.transition(s, o.next_state) += pa * o.prob;
                chain.reward(s) += pa * o.prob * o.reward;
            }
        }
    }
    return chain;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
    const int n = static_cast<int>(transition.rows());
    if (transition.cols() != n) throw ContractError("stationary_distribution: matrix not square");

    // (P^T - I) mu = 0 with the last balance equation replaced by sum(mu) = 1.
    // The system is nonsingular exactly when the chain has one recurrent class.
    Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
        throw NotUnichainError("stationary_distribution: chain is not unichain "
                               "(singular balance system)");
    Eigen::VectorXd mu = lu.solve(b);

    // roundoff can leave tiny negatives on transient states
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (mu(i) < 0.0) {
            if (mu(i) < -1e-9)
                throw NotUnichainError("stationary_distribution: solve produced a "
                                       "significantly negative mass");
            mu(i) = 0.0;
        }
        total += mu(i);
    }
    mu /= total;

    const double residual = (mu.transpose() * transition - mu.transpose()).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw NotUnichainError("stationary_distribution: solution fails stationarity check");
    return mu;
}

namespace {

// Iterative Tarjan SCC; returns component id per node, components numbered
// in reverse topological order of discovery.
std::vector<int> tarjan_scc(const std::vector<std::vector<int>>& adj, int& num_components) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), lowlink(n, 0), component(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int next_index = 0;
    num_components = 0;

    struct Frame {
        int node;
        std::size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.child < adj[f.node].size()) {
                const int w = adj[f.node][f.child++];
                if (index[w] == -1) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    lowlink[f.node] = std::min(lowlink[f.node], index[w]);
                }
            } else {
                if (lowlink[f.node] == index[f.node]) {
                    while (true) {
                        const int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        component[w] = num_components;
                        if (w == f.node) break;
                    }
                    ++num_components;
                }
                const int done = f.node;
                frames.pop_back();
                if (!frames.empty())
                    lowlink[frames.back().node] =
                        std::min(lowlink[frames.back().node], lowlink[done]);
            }
        }
    }
    return component;
}

}  // namespace

int count_recurrent_classes(const std::vector<std::vector<int>>& adjacency) {
    int num_components = 0;
    const std::vector<int> component = tarjan_scc(adjacency, num_components);
    // a class is recurrent iff no edge leaves it
    std::vector<bool> closed(num_components, true);
    for (std::size_t v = 0; v < adjacency.size(); ++v)
        for (int w : adjacency[v])
            if (component[v] != component[w]) closed[component[v]] = false;
    return static_cast<int>(std::count(closed.begin(), closed.end(), true));
}

bool is_unichain(const TabularMdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
        throw ContractError("is_unichain: policy dimensions do not match MDP");
    const int n = mdp.num_states();
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s) {
        std::vector<bool> seen(n, false);
        for (int a = 0; a < mdp.num_actions(); ++a) {
            if (policy.prob(s, a) <= 0.0) continue;
            for (const Outcome& o : mdp.outcomes(s, a)) {
                if (o.prob > 0.0 && !seen[o.next_state]) {
                    seen[o.next_state] = true;
                    adj[s].push_back(o.next_state);
                }
            }
        }
    }
    return count_recurrent_classes(adj) == 1;
}

DetPolicyEnumerator::DetPolicyEnumerator(const TabularMdp& mdp, std::uint64_t cap)
    : num_states_(mdp.num_states()), num_actions_(mdp.num_actions()) {
    count_ = 1;
    bool overflow = false;
    for (int s = 0; s < num_states_; ++s) {
        if (count_ > cap / static_cast<std::uint64_t>(num_actions_) + 1) {
            overflow = true;
            break;
        }
        count_ *= static_cast<std::uint64_t>(num_actions_);
    }
    if (overflow || count_ > cap) {
        const std::string count_str =
            overflow ? std::to_string(num_actions_) + "^" + std::to_string(num_states_)
                     : std::to_string(count_);
        throw CapExceededError("enumerate_det_policies: " + count_str +
                               " deterministic policies exceed the cap of " +
                               std::to_string(cap));
    }
    current_.assign(num_states_, 0);
}

bool DetPolicyEnumerator::next(std::vector<int>& actions) {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        actions = current_;
        return true;
    }
    // odometer with the last state fastest keeps lexicographic order
    int s = num_states_ - 1;
    while (s >= 0 && current_[s] == num_actions_ - 1) {
        current_[s] = 0;
        --s;
    }
    if (s < 0) {
        done_ = true;
        return false;
    }
    ++current_[s];
    actions = current_;
    return true;
}

std::vector<Policy> enumerate_det_policies(const TabularMdp& mdp, std::uint64_t cap) {
    DetPolicyEnumerator en(mdp, cap);
    std::vector<Policy> result;
    result.reserve(en.count());
    std::vector<int> actions;
    while (en.next(actions)) result.push_back(Policy::deterministic(actions, mdp.num_actions()));
    return result;
}

}  // namespace averl
