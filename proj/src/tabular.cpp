#include "averl/tabular.hpp"

#include <cmath>

namespace averl {

int ValueStore::greedy_action(int s) const {
    int best = 0;
    for (int a = 1; a < table.cols(); ++a)
        if (table(s, a) > table(s, best)) best = a;
    return best;
}

std::vector<int> ValueStore::greedy_actions() const {
    std::vector<int> acts(table.rows());
    for (int s = 0; s < table.rows(); ++s) acts[s] = greedy_action(s);
    return acts;
}

TabularAgentKind tabular_agent_from_name(const std::string& name) {
    if (name == "q") return TabularAgentKind::DiscountedQ;
    if (name == "rviq") return TabularAgentKind::RviQ;
    if (name == "rlearn") return TabularAgentKind::RLearning;
    throw ParseError("unknown tabular agent '" + name + "' (expected q, rviq or rlearn)");
}

void LearningConfig::check() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in (0, 1]");
    if (!(alpha_u > 0.0 && alpha_u <= 1.0)) throw ContractError("alpha_u must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractError("gamma must lie in [0, 1)");
    if (steps < 0) throw ContractError("steps must be >= 0");
    if (eval_every <= 0) throw ContractError("eval_every must be > 0");
    if (eval_len <= 0) throw ContractError("eval_len must be > 0");
    if (eval_burnin < 0 || eval_burnin >= eval_len)
        throw ContractError("eval_burnin must lie in [0, eval_len)");
    if (ref_state < 0) throw ContractError("ref_state must be >= 0");
}

namespace {

double linear_schedule(double start, double final, long long horizon, long long step) {
    if (final < 0.0 || horizon <= 0) return start;
    if (step >= horizon) return final;
    return start + (final - start) * static_cast<double>(step) / static_cast<double>(horizon);
}

}  // namespace

double LearningConfig::epsilon_at(long long step) const {
    return linear_schedule(epsilon, epsilon_final, epsilon_anneal_steps, step);
}

double LearningConfig::alpha_at(long long step) const {
    return linear_schedule(alpha, alpha_final, alpha_anneal_steps, step);
}

int epsilon_greedy(const Eigen::VectorXd& q_row, double epsilon, Rng& rng) {
    if (q_row.size() == 0) throw ContractError("epsilon_greedy: empty action-value row");
    if (epsilon > 0.0 && rng.uniform() < epsilon)
        return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(q_row.size())));
    int best = 0;
    for (int a = 1; a < q_row.size(); ++a)
        if (q_row(a) > q_row(best)) best = a;
    return best;
}

void q_learning_update(ValueStore& store, int s, int a, double u, int s_next, double gamma,
                       double alpha) {
    const double target = u + gamma * store.table.row(s_next).maxCoeff();
    store.table(s, a) += alpha * (target - store.table(s, a));
}

void rvi_q_update(ValueStore& store, int s, int a, double u, int s_next, int ref_state,
                  double alpha) {
    const double target =
        u + store.table.row(s_next).maxCoeff() - store.table.row(ref_state).maxCoeff();
    store.table(s, a) += alpha * (target - store.table(s, a));
}

void r_learning_update(ValueStore& store, int s, int a, double u, int s_next, double alpha_r) {
    const double target = u - store.u_tilde + store.table.row(s_next).maxCoeff();
    store.table(s, a) += alpha_r * (target - store.table(s, a));
}

void r_learning_avg_update(ValueStore& store, int s, int a, double u, int s_next,
                           double alpha_u) {
    // gate on the freshly updated table; equality means the greedy action
    // was taken (ties pass)
    if (store.table(s, a) != store.table.row(s).maxCoeff()) return;
    const double err = u + store.table.row(s_next).maxCoeff() - store.table(s, a) - store.u_tilde;
    store.u_tilde += alpha_u * err;
}

double evaluate_greedy_policy(const std::vector<int>& actions, Env& env, long long length,
                              long long burnin, std::uint64_t seed) {
    if (length <= burnin) throw ContractError("evaluate_greedy_policy: length must exceed burnin");
    env.reset(seed);
    double total = 0.0;
    for (long long t = 0; t < length; ++t) {
        const auto s = env.state_id();
        const double u = env.step(actions[static_cast<std::size_t>(s)]);
        if (t >= burnin) total += u;
    }
    return total / static_cast<double>(length - burnin);
}

RunRecord train_tabular(TabularAgentKind kind, Env& env, const LearningConfig& config) {
    config.check();
    const auto num_states = env.num_states();
    if (!num_states)
        throw ContractError("train_tabular: environment state space is not indexable");
    const int n = *num_states;
    const int m = env.num_actions();
    if (kind == TabularAgentKind::RviQ && config.ref_state >= n)
        throw ContractError("train_tabular: ref_state out of range");

    ValueStore store = ValueStore::zeros(n, m);
    Rng rng(config.seed);
    env.reset(Rng::mix(config.seed, 0x7261696e));   // training stream
    const auto eval_env = env.clone();

    RunRecord record;
    record.seed = config.seed;

    const bool has_u_tilde = kind == TabularAgentKind::RLearning;
    for (long long step = 0; step < config.steps; ++step) {
        const int s = static_cast<int>(env.state_id());
        const int a = epsilon_greedy(store.table.row(s), config.epsilon_at(step), rng);
        const double u = env.step(a);
        const int s_next = static_cast<int>(env.state_id());
        const double alpha = config.alpha_at(step);
        switch (kind) {
            case TabularAgentKind::DiscountedQ:
                q_learning_update(store, s, a, u, s_next, config.gamma, alpha);
                break;
            case TabularAgentKind::RviQ:
                rvi_q_update(store, s, a, u, s_next, config.ref_state, alpha);
                break;
            case TabularAgentKind::RLearning:
                r_learning_update(store, s, a, u, s_next, alpha);
                r_learning_avg_update(store, s, a, u, s_next, config.alpha_u);
                break;
        }
        if ((step + 1) % config.eval_every == 0) {
            EvalPoint point;
            point.step = step + 1;
            point.eval_avg_reward =
                evaluate_greedy_policy(store.greedy_actions(), *eval_env, config.eval_len,
                                       config.eval_burnin, Rng::mix(config.seed, step + 1));
            if (has_u_tilde) point.u_tilde = store.u_tilde;
            record.points.push_back(point);
        }
    }
    return record;
}

}  // namespace averl
