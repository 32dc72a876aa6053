#include "averl/deep.hpp"

#include <algorithm>
#include <cmath>

namespace averl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ContractError("ReplayBuffer: capacity must be > 0");
    items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
    if (batch_size == 0 || batch_size > items_.size())
        throw ContractError("ReplayBuffer::sample: batch size " + std::to_string(batch_size) +
                            " not available from " + std::to_string(items_.size()) + " items");
    std::vector<Transition> batch;
    batch.reserve(batch_size);
    if (batch_size * 2 >= items_.size()) {
        // dense draw: partial Fisher-Yates over an index vector
        std::vector<std::size_t> idx(items_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < batch_size; ++i) {
            const std::size_t j = i + rng.uniform_int(idx.size() - i);
            std::swap(idx[i], idx[j]);
            batch.push_back(items_[idx[i]]);
        }
    } else {
        // sparse draw: rejection keeps the batch distinct without touching
        // the whole index range
        std::vector<std::size_t> chosen;
        chosen.reserve(batch_size);
        while (chosen.size() < batch_size) {
            const std::size_t j = rng.uniform_int(items_.size());
            bool duplicate = false;
            for (const std::size_t c : chosen)
                if (c == j) {
                    duplicate = true;
                    break;
                }
            if (!duplicate) {
                chosen.push_back(j);
                batch.push_back(items_[j]);
            }
        }
    }
    return batch;
}

DeepAgentKind deep_agent_from_name(const std::string& name) {
    if (name == "ddr") return DeepAgentKind::Ddr;
    if (name == "ddrviq") return DeepAgentKind::Ddrviq;
    if (name == "ddqn") return DeepAgentKind::Ddqn;
    throw ParseError("unknown deep agent '" + name + "' (expected ddr, ddrviq or ddqn)");
}

void DeepAgentConfig::check() const {
    if (!(lr >= 0.0)) throw ContractError("lr must be >= 0");
    if (optimizer != "adam" && optimizer != "sgd")
        throw ContractError("optimizer must be 'adam' or 'sgd'");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractError("gamma must lie in [0, 1)");
    if (!(alpha_u > 0.0 && alpha_u <= 1.0)) throw ContractError("alpha_u must lie in (0, 1]");
    if (batch_size < 1) throw ContractError("batch_size must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch_size))
        throw ContractError("buffer_capacity must be >= batch_size");
    if (target_sync_every < 1) throw ContractError("target_sync_every must be >= 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0) ||
        (epsilon_final >= 0.0 && epsilon_final > 1.0))
        throw ContractError("epsilon schedule values must lie in [0, 1]");
    if (steps < 0) throw ContractError("steps must be >= 0");
    if (eval_every <= 0) throw ContractError("eval_every must be > 0");
    if (eval_burnin < 0 || eval_burnin >= eval_horizon)
        throw ContractError("eval_burnin must lie in [0, eval_horizon)");
}

double DeepAgentConfig::epsilon_at(long long step) const {
    if (epsilon_final < 0.0 || epsilon_anneal_steps <= 0) return epsilon;
    if (step >= epsilon_anneal_steps) return epsilon_final;
    return epsilon + (epsilon_final - epsilon) * static_cast<double>(step) /
                         static_cast<double>(epsilon_anneal_steps);
}

namespace {

Eigen::MatrixXd stack_columns(const std::vector<Transition>& batch, bool next) {
    const auto dim = next ? batch.front().next_state.size() : batch.front().state.size();
    Eigen::MatrixXd m(dim, batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const auto& f = next ? batch[j].next_state : batch[j].state;
        if (f.size() != dim) throw ContractError("batch features have inconsistent dimensions");
        for (std::size_t i = 0; i < dim; ++i) m(static_cast<int>(i), static_cast<int>(j)) = f[i];
    }
    return m;
}

void require_nonempty(const std::vector<Transition>& batch) {
    if (batch.empty()) throw ContractError("learn step requires a non-empty batch");
}

double sgd_like_step(NetworkParameters& online, const Eigen::MatrixXd& states,
                     const std::vector<int>& actions, const Eigen::VectorXd& targets,
                     Optimizer& opt) {
    GradientSet grads = GradientSet::zeros_like(online);
    const double loss = backward_batch(online, states, actions, targets, grads);
    opt.step(online, grads);
    return loss;
}

}  // namespace

double ddr_value_step(NetworkParameters& online, const NetworkParameters& target,
                      double u_tilde, const std::vector<Transition>& batch, Optimizer& opt) {
    require_nonempty(batch);
    const Eigen::MatrixXd next_q = forward_batch(target, stack_columns(batch, true));
    Eigen::VectorXd targets(batch.size());
    std::vector<int> actions(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        targets(static_cast<int>(j)) =
            batch[j].reward - u_tilde + next_q.col(static_cast<int>(j)).maxCoeff();
        actions[j] = batch[j].action;
    }
    return sgd_like_step(online, stack_columns(batch, false), actions, targets, opt);
}

void ddr_average_reward_step(const NetworkParameters& target, double& u_tilde,
                             const std::vector<Transition>& batch, double alpha_u) {
    require_nonempty(batch);
    const Eigen::MatrixXd cur_q = forward_batch(target, stack_columns(batch, false));
    const Eigen::MatrixXd next_q = forward_batch(target, stack_columns(batch, true));
    double mean_err = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const int col = static_cast<int>(j);
        mean_err += batch[j].reward + next_q.col(col).maxCoeff() -
                    cur_q(batch[j].action, col) - u_tilde;
    }
    mean_err /= static_cast<double>(batch.size());
    u_tilde += alpha_u * mean_err;
}

std::pair<double, double> ddr_learn_batch(NetworkParameters& online,
                                          const NetworkParameters& target, double u_tilde,
                                          const std::vector<Transition>& batch, double alpha_u,
                                          Optimizer& opt) {
    const double loss = ddr_value_step(online, target, u_tilde, batch, opt);
    ddr_average_reward_step(target, u_tilde, batch, alpha_u);
    return {loss, u_tilde};
}

double ddrviq_learn_batch(NetworkParameters& online, const NetworkParameters& target,
                          const std::vector<double>& ref_features,
                          const std::vector<Transition>& batch, Optimizer& opt) {
    require_nonempty(batch);
    Eigen::VectorXd ref(ref_features.size());
    for (std::size_t i = 0; i < ref_features.size(); ++i)
        ref(static_cast<int>(i)) = ref_features[i];
    const double ref_max = forward(target, ref).maxCoeff();
    const Eigen::MatrixXd next_q = forward_batch(target, stack_columns(batch, true));
    Eigen::VectorXd targets(batch.size());
    std::vector<int> actions(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        targets(static_cast<int>(j)) =
            batch[j].reward + next_q.col(static_cast<int>(j)).maxCoeff() - ref_max;
        actions[j] = batch[j].action;
    }
    return sgd_like_step(online, stack_columns(batch, false), actions, targets, opt);
}

double dqn_learn_batch(NetworkParameters& online, const NetworkParameters& target, double gamma,
                       const std::vector<Transition>& batch, Optimizer& opt) {
    require_nonempty(batch);
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractError("gamma must lie in [0, 1)");
    const Eigen::MatrixXd next_q = forward_batch(target, stack_columns(batch, true));
    Eigen::VectorXd targets(batch.size());
    std::vector<int> actions(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        targets(static_cast<int>(j)) =
            batch[j].reward + gamma * next_q.col(static_cast<int>(j)).maxCoeff();
        actions[j] = batch[j].action;
    }
    return sgd_like_step(online, stack_columns(batch, false), actions, targets, opt);
}

int act(const NetworkParameters& params, const std::vector<double>& features, double epsilon,
        Rng& rng) {
    if (epsilon > 0.0 && rng.uniform() < epsilon)
        return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(params.num_actions)));
    Eigen::VectorXd f(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) f(static_cast<int>(i)) = features[i];
    const Eigen::VectorXd q = forward(params, f);
    int best = 0;
    for (int a = 1; a < q.size(); ++a)
        if (q(a) > q(best)) best = a;
    return best;
}

double evaluate_policy(const NetworkParameters& params, Env& env, long long horizon,
                       long long burnin, std::uint64_t seed) {
    if (horizon <= burnin) throw ContractError("evaluate_policy: horizon must exceed burnin");
    env.reset(seed);
    Rng unused(0);
    double total = 0.0;
    for (long long t = 0; t < horizon; ++t) {
        const int a = act(params, env.features(), 0.0, unused);
        const double u = env.step(a);
        if (t >= burnin) total += u;
    }
    return total / static_cast<double>(horizon - burnin);
}

RunRecord train_deep(DeepAgentKind kind, Env& env, const DeepAgentConfig& config) {
    config.check();
    if (kind == DeepAgentKind::Ddrviq &&
        static_cast<int>(config.ref_features.size()) != env.feature_dim())
        throw ContractError("train_deep: ddrviq needs ref_features of the env feature dimension");

    Rng rng(config.seed);
    NetworkParameters online =
        config.checkpoint_in.empty()
            ? NetworkParameters::randomized(env.feature_dim(), env.num_actions(), config.hidden,
                                            rng)
            : load_params(config.checkpoint_in);
    if (online.input_dim != env.feature_dim() || online.num_actions != env.num_actions())
        throw ContractError("train_deep: checkpoint shape does not match environment");
    NetworkParameters target = sync_target(online);
    Optimizer opt(config.optimizer == "adam" ? Optimizer::Kind::Adam : Optimizer::Kind::Sgd,
                  config.lr);
    ReplayBuffer buffer(config.buffer_capacity);
    double u_tilde = 0.0;
    long long target_syncs = 0;

    env.reset(Rng::mix(config.seed, 0x7261696e));
    const auto eval_env = env.clone();

    RunRecord record;
    record.seed = config.seed;

    double loss_sum = 0.0;
    long long loss_count = 0;
    for (long long step = 0; step < config.steps; ++step) {
        Transition t;
        t.state = env.features();
        t.action = act(online, t.state, config.epsilon_at(step), rng);
        t.reward = env.step(t.action);
        t.next_state = env.features();
        buffer.push(std::move(t));

        if (buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
            const auto batch = buffer.sample(config.batch_size, rng);
            double loss = 0.0;
            switch (kind) {
                case DeepAgentKind::Ddr: {
                    const auto [l, u] = ddr_learn_batch(online, target, u_tilde, batch,
                                                        config.alpha_u, opt);
                    loss = l;
                    u_tilde = u;
                    break;
                }
                case DeepAgentKind::Ddrviq:
                    loss = ddrviq_learn_batch(online, target, config.ref_features, batch, opt);
                    break;
                case DeepAgentKind::Ddqn:
                    loss = dqn_learn_batch(online, target, config.gamma, batch, opt);
                    break;
            }
            loss_sum += loss;
            ++loss_count;
        }
        if ((step + 1) % config.target_sync_every == 0) {
            target = sync_target(online);
            ++target_syncs;
        }
        if ((step + 1) % config.eval_every == 0) {
            EvalPoint point;
            point.step = step + 1;
            point.eval_avg_reward = evaluate_policy(online, *eval_env, config.eval_horizon,
                                                    config.eval_burnin,
                                                    Rng::mix(config.seed, step + 1));
            if (kind == DeepAgentKind::Ddr) point.u_tilde = u_tilde;
            point.loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
            point.target_syncs = target_syncs;
            record.points.push_back(point);
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    if (!config.checkpoint_out.empty()) save_params(online, config.checkpoint_out);
    return record;
}

}  // namespace averl
