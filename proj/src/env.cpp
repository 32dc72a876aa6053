#include "averl/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "averl/serialize.hpp"

namespace averl {

// ---------------------------------------------------------------------------
// MdpEnv

MdpEnv::MdpEnv(TabularMdp mdp, int initial_state)
    : mdp_(std::move(mdp)), initial_state_(initial_state), state_(initial_state) {
    if (initial_state_ < 0 || initial_state_ >= mdp_.num_states())
        throw ContractError("MdpEnv: initial state out of range");
}

void MdpEnv::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    state_ = initial_state_;
}

double MdpEnv::step(int action) {
    if (action < 0 || action >= mdp_.num_actions())
        throw ContractError("MdpEnv::step: action out of range");
    const auto& outs = mdp_.outcomes(state_, action);
    const double u = rng_.uniform();
    double acc = 0.0;
    const Outcome* chosen = &outs.back();
    for (const Outcome& o : outs) {
        acc += o.prob;
        if (u < acc) {
            chosen = &o;
            break;
        }
    }
    state_ = chosen->next_state;
    return chosen->reward;
}

std::vector<double> MdpEnv::encode_state(std::int64_t state) const {
    if (state < 0 || state >= mdp_.num_states())
        throw ContractError("MdpEnv::encode_state: state out of range");
    std::vector<double> f(mdp_.num_states(), 0.0);
    f[static_cast<std::size_t>(state)] = 1.0;
    return f;
}

std::unique_ptr<Env> MdpEnv::clone() const {
    return std::make_unique<MdpEnv>(mdp_, initial_state_);
}

TabularExport MdpEnv::do_to_tabular(std::size_t cap) const {
    if (static_cast<std::size_t>(mdp_.num_states()) > cap)
        throw CapExceededError("to_tabular: " + std::to_string(mdp_.num_states()) +
                               " states exceed the export cap of " + std::to_string(cap));
    TabularExport ex{mdp_, {}, {}, initial_state_};
    for (int s = 0; s < mdp_.num_states(); ++s) {
        ex.compact_to_state.push_back(s);
        ex.state_to_compact[s] = s;
    }
    return ex;
}

// ---------------------------------------------------------------------------
// AoiEnv

namespace {

// digits: first the K cached ages, then the N*K delivered ages (user-major),
// each stored as age - 1 in base delta_max
std::int64_t pack_digits(const std::vector<int>& ecn, const std::vector<int>& user, int base) {
    std::int64_t id = 0;
    for (auto it = user.rbegin(); it != user.rend(); ++it) id = id * base + (*it - 1);
    for (auto it = ecn.rbegin(); it != ecn.rend(); ++it) id = id * base + (*it - 1);
    return id;
}

void unpack_digits(std::int64_t id, int base, std::vector<int>& ecn, std::vector<int>& user) {
    for (auto& v : ecn) {
        v = static_cast<int>(id % base) + 1;
        id /= base;
    }
    for (auto& v : user) {
        v = static_cast<int>(id % base) + 1;
        id /= base;
    }
}

}  // namespace

AoiEnv::AoiEnv(AoiConfig config) : config_(std::move(config)) {
    if (config_.num_sensors < 1 || config_.num_users < 1)
        throw ContractError("AoiEnv: K and N must be >= 1");
    if (config_.delta_max < 2) throw ContractError("AoiEnv: delta_max must be >= 2");
    if (config_.beta1 < 0.0 || config_.beta2 < 0.0)
        throw ContractError("AoiEnv: beta weights must be >= 0");
    if (!(config_.request_prob >= 0.0 && config_.request_prob <= 1.0))
        throw ContractError("AoiEnv: request_prob must lie in [0, 1]");
    if (config_.energy_costs.empty())
        config_.energy_costs.assign(config_.num_sensors, 1.0);
    if (static_cast<int>(config_.energy_costs.size()) != config_.num_sensors)
        throw ContractError("AoiEnv: energy_costs size must equal K");
    if (config_.subset_actions && config_.num_sensors > 20)
        throw ContractError("AoiEnv: subset actions limited to K <= 20");
    ecn_aoi_.assign(config_.num_sensors, config_.delta_max);
    user_aoi_.assign(config_.num_users * config_.num_sensors, config_.delta_max);
}

int AoiEnv::num_actions() const {
    return config_.subset_actions ? (1 << config_.num_sensors) : config_.num_sensors + 1;
}

int AoiEnv::feature_dim() const {
    return config_.num_sensors + config_.num_users * config_.num_sensors;
}

std::optional<int> AoiEnv::num_states() const {
    const int digits = feature_dim();
    std::int64_t total = 1;
    for (int i = 0; i < digits; ++i) {
        if (total > (std::numeric_limits<int>::max() / config_.delta_max)) return std::nullopt;
        total *= config_.delta_max;
    }
    return static_cast<int>(total);
}

void AoiEnv::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    std::fill(ecn_aoi_.begin(), ecn_aoi_.end(), config_.delta_max);
    std::fill(user_aoi_.begin(), user_aoi_.end(), config_.delta_max);
}

std::vector<bool> AoiEnv::activation_set(int action) const {
    if (action < 0 || action >= num_actions())
        throw ContractError("AoiEnv: action out of range");
    std::vector<bool> active(config_.num_sensors, false);
    if (config_.subset_actions) {
        for (int k = 0; k < config_.num_sensors; ++k) active[k] = (action >> k) & 1;
    } else if (action > 0) {
        active[action - 1] = true;
    }
    return active;
}

double AoiEnv::apply(int action, const std::vector<bool>& requests) {
    const auto active = activation_set(action);
    double energy = 0.0;
    for (int k = 0; k < config_.num_sensors; ++k) {
        if (active[k]) {
            ecn_aoi_[k] = 1;
            energy += config_.energy_costs[k];
        } else {
            ecn_aoi_[k] = std::min(ecn_aoi_[k] + 1, config_.delta_max);
        }
    }
    double age_sum = 0.0;
    for (int n = 0; n < config_.num_users; ++n) {
        for (int k = 0; k < config_.num_sensors; ++k) {
            int& age = user_aoi_[n * config_.num_sensors + k];
            if (requests[n * config_.num_sensors + k]) age = ecn_aoi_[k];
            else age = std::min(age + 1, config_.delta_max);
            age_sum += age;
        }
    }
    const double mean_age = age_sum / (config_.num_users * config_.num_sensors);
    return -(config_.beta1 * mean_age + config_.beta2 * energy);
}

double AoiEnv::step(int action) {
    std::vector<bool> requests(config_.num_users * config_.num_sensors);
    for (std::size_t i = 0; i < requests.size(); ++i)
        requests[i] = rng_.uniform() < config_.request_prob;
    return apply(action, requests);
}

std::int64_t AoiEnv::state_id() const {
    if (!num_states()) throw ContractError("AoiEnv::state_id: state space too large to index");
    return pack_digits(ecn_aoi_, user_aoi_, config_.delta_max);
}

std::vector<double> AoiEnv::features() const {
    std::vector<double> f;
    f.reserve(feature_dim());
    for (int v : ecn_aoi_) f.push_back(static_cast<double>(v) / config_.delta_max);
    for (int v : user_aoi_) f.push_back(static_cast<double>(v) / config_.delta_max);
    return f;
}

std::vector<double> AoiEnv::encode_state(std::int64_t state) const {
    const auto total = num_states();
    if (!total) throw ContractError("AoiEnv::encode_state: state space too large to index");
    if (state < 0 || state >= *total)
        throw ContractError("AoiEnv::encode_state: state out of range");
    std::vector<int> ecn(config_.num_sensors), user(config_.num_users * config_.num_sensors);
    unpack_digits(state, config_.delta_max, ecn, user);
    std::vector<double> f;
    f.reserve(feature_dim());
    for (int v : ecn) f.push_back(static_cast<double>(v) / config_.delta_max);
    for (int v : user) f.push_back(static_cast<double>(v) / config_.delta_max);
    return f;
}

std::unique_ptr<Env> AoiEnv::clone() const { return std::make_unique<AoiEnv>(config_); }

TabularExport AoiEnv::do_to_tabular(std::size_t cap) const {
    const int digits = feature_dim();
    const double id_bits = digits * std::log2(static_cast<double>(config_.delta_max));
    if (id_bits > 62.0) {
        char bound[64];
        std::snprintf(bound, sizeof(bound), "%d^%d (~1e%.0f)", config_.delta_max, digits,
                      digits * std::log10(static_cast<double>(config_.delta_max)));
        throw CapExceededError("to_tabular: state space bound " + std::string(bound) +
                               " exceeds the export cap of " + std::to_string(cap));
    }
    const int cells = config_.num_users * config_.num_sensors;
    const bool stochastic = config_.request_prob > 0.0 && config_.request_prob < 1.0;
    if (stochastic && cells > 16)
        throw CapExceededError("to_tabular: 2^" + std::to_string(cells) +
                               " request patterns per step exceed the expansion limit");

    AoiEnv scratch(config_);
    const int num_acts = num_actions();

    std::vector<std::int64_t> compact_to_state;
    std::unordered_map<std::int64_t, int> state_to_compact;
    std::vector<std::int64_t> frontier;

    scratch.reset(0);
    const std::int64_t start = scratch.state_id();
    state_to_compact[start] = 0;
    compact_to_state.push_back(start);
    frontier.push_back(start);

    // per discovered state: per action, accumulated (next_id -> (prob, reward))
    std::vector<std::vector<std::map<std::int64_t, std::pair<double, double>>>> rows;

    const int num_patterns = stochastic ? (1 << cells) : 1;
    std::vector<bool> requests(cells);
    for (std::size_t idx = 0; idx < frontier.size(); ++idx) {
        const std::int64_t id = frontier[idx];
        rows.emplace_back(num_acts);
        auto& state_row = rows.back();
        for (int a = 0; a < num_acts; ++a) {
            for (int pat = 0; pat < num_patterns; ++pat) {
                double prob = 1.0;
                for (int c = 0; c < cells; ++c) {
                    const bool req = stochastic ? ((pat >> c) & 1) : (config_.request_prob >= 1.0);
                    requests[c] = req;
                    if (stochastic)
                        prob *= req ? config_.request_prob : (1.0 - config_.request_prob);
                }
                unpack_digits(id, config_.delta_max, scratch.ecn_aoi_, scratch.user_aoi_);
                const double reward = scratch.apply(a, requests);
                const std::int64_t next = scratch.state_id();
                auto& slot = state_row[a][next];
                slot.first += prob;
                slot.second = reward;
                if (!state_to_compact.count(next)) {
                    if (compact_to_state.size() >= cap)
                        throw CapExceededError(
                            "to_tabular: reachable state count exceeds the export cap of " +
                            std::to_string(cap));
                    state_to_compact[next] = static_cast<int>(compact_to_state.size());
                    compact_to_state.push_back(next);
                    frontier.push_back(next);
                }
            }
        }
    }

    const int n = static_cast<int>(compact_to_state.size());
    TabularMdp::Kernel kernel(n, std::vector<std::vector<Outcome>>(num_acts));
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < num_acts; ++a)
            for (const auto& [next, pr] : rows[s][a])
                kernel[s][a].push_back(Outcome{state_to_compact.at(next), pr.second, pr.first});

    TabularExport ex{TabularMdp(n, num_acts, std::move(kernel)), std::move(compact_to_state),
                     std::move(state_to_compact), 0};
    return ex;
}

// ---------------------------------------------------------------------------
// Generators

TabularMdp random_unichain(int num_states, int num_actions, std::uint64_t seed,
                           std::pair<double, double> reward_range) {
    if (num_states < 1 || num_actions < 1)
        throw ContractError("random_unichain: sizes must be >= 1");
    const double eps_mix = 0.05;
    Rng rng(seed);
    TabularMdp::Kernel kernel(num_states, std::vector<std::vector<Outcome>>(num_actions));
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            std::vector<double> raw(num_states);
            double total = 0.0;
            for (double& x : raw) {
                x = rng.uniform();
                total += x;
            }
            std::vector<Outcome> outs(num_states);
            double mixed_total = 0.0;
            for (int t = 0; t < num_states; ++t) {
                outs[t].next_state = t;
                outs[t].prob = (1.0 - eps_mix) * raw[t] / total + eps_mix / num_states;
                mixed_total += outs[t].prob;
            }
            for (Outcome& o : outs) {
                o.prob /= mixed_total;
                o.reward = rng.uniform(reward_range.first, reward_range.second);
            }
            kernel[s][a] = std::move(outs);
        }
    }
    return TabularMdp(num_states, num_actions, std::move(kernel));
}

TabularMdp delayed_payoff_mdp() {
    TabularMdp::Kernel kernel(3, std::vector<std::vector<Outcome>>(2));
    kernel[0][0] = {Outcome{0, 1.0, 1.0}};    // stay on the small self-loop
    kernel[0][1] = {Outcome{1, 0.0, 1.0}};    // enter the delayed cycle
    kernel[1][0] = {Outcome{2, 0.0, 1.0}};
    kernel[1][1] = {Outcome{2, 0.0, 1.0}};
    kernel[2][0] = {Outcome{0, 10.0, 1.0}};
    kernel[2][1] = {Outcome{0, 10.0, 1.0}};
    return TabularMdp(3, 2, std::move(kernel));
}

// ---------------------------------------------------------------------------
// Spec-string parsing

namespace {

std::unordered_map<std::string, std::string> parse_fields(const std::string& body,
                                                          const std::string& env_name) {
    std::unordered_map<std::string, std::string> fields;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ParseError(env_name + ": field '" + item + "' is not of the form key=value");
        fields[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return fields;
}

class FieldReader {
public:
    FieldReader(std::unordered_map<std::string, std::string> fields, std::string env_name)
        : fields_(std::move(fields)), env_name_(std::move(env_name)) {}

    ~FieldReader() = default;

    long long require_int(const std::string& key) {
        auto v = take(key);
        if (!v) throw ParseError(env_name_ + ": missing required field '" + key + "'");
        return to_int(key, *v);
    }

    long long int_or(const std::string& key, long long fallback) {
        auto v = take(key);
        return v ? to_int(key, *v) : fallback;
    }

    double real_or(const std::string& key, double fallback) {
        auto v = take(key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            const double x = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("");
            return x;
        } catch (const std::exception&) {
            throw ParseError(env_name_ + ": field '" + key + "' has non-numeric value '" + *v +
                             "'");
        }
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = fields_.find(key);
        if (it == fields_.end()) return std::nullopt;
        std::string v = it->second;
        fields_.erase(it);
        return v;
    }

    void finish() const {
        if (!fields_.empty())
            throw ParseError(env_name_ + ": unknown field '" + fields_.begin()->first + "'");
    }

private:
    long long to_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const long long x = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return x;
        } catch (const std::exception&) {
            throw ParseError(env_name_ + ": field '" + key + "' has non-integer value '" + v +
                             "'");
        }
    }

    std::unordered_map<std::string, std::string> fields_;
    std::string env_name_;
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (name == "delayed") {
        if (!body.empty()) throw ParseError("delayed: takes no fields");
        return std::make_unique<MdpEnv>(delayed_payoff_mdp());
    }
    if (name == "random") {
        FieldReader r(parse_fields(body, "random"), "random");
        const int s = static_cast<int>(r.require_int("S"));
        const int a = static_cast<int>(r.require_int("A"));
        const auto seed = static_cast<std::uint64_t>(r.int_or("seed", 0));
        const double rmin = r.real_or("rmin", 0.0);
        const double rmax = r.real_or("rmax", 1.0);
        r.finish();
        return std::make_unique<MdpEnv>(random_unichain(s, a, seed, {rmin, rmax}));
    }
    if (name == "aoi") {
        FieldReader r(parse_fields(body, "aoi"), "aoi");
        AoiConfig cfg;
        cfg.num_sensors = static_cast<int>(r.require_int("K"));
        cfg.num_users = static_cast<int>(r.require_int("N"));
        cfg.delta_max = static_cast<int>(r.require_int("dmax"));
        cfg.beta1 = r.real_or("b1", 1.0);
        cfg.beta2 = r.real_or("b2", 1.0);
        cfg.request_prob = r.real_or("p", 0.5);
        const double energy = r.real_or("e", 1.0);
        if (auto acts = r.take("acts")) {
            if (*acts == "subset") cfg.subset_actions = true;
            else if (*acts == "onehot") cfg.subset_actions = false;
            else throw ParseError("aoi: field 'acts' must be 'onehot' or 'subset'");
        }
        r.finish();
        if (cfg.num_sensors >= 1) cfg.energy_costs.assign(cfg.num_sensors, energy);
        return std::make_unique<AoiEnv>(std::move(cfg));
    }
    if (name == "file") {
        if (body.empty()) throw ParseError("file: missing path");
        return std::make_unique<MdpEnv>(load_mdp_file(body));
    }
    throw ParseError("unknown environment '" + name + "'");
}

}  // namespace averl
