#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "averl/mdp.hpp"
#include "averl/rng.hpp"

namespace averl {

/// to_tabular output: the exported kernel plus the mapping between compact
/// kernel indices and the environment's canonical state ids.
struct TabularExport {
    TabularMdp mdp;
    std::vector<std::int64_t> compact_to_state;
    std::unordered_map<std::int64_t, int> state_to_compact;
    int initial_state = 0;   // compact index of the reset state
};

inline constexpr std::size_t kDefaultExportCap = 100'000;

/// Continuing environment: reset starts a run, step never terminates.
/// Stepping is a pure function of (internal state, action, internal rng
/// stream), so a seed reproduces a trajectory exactly.
class Env {
public:
    virtual ~Env() = default;

    virtual int num_actions() const = 0;
    virtual int feature_dim() const = 0;

    /// Count of canonical states (the range of state_id), when it fits in
    /// an int; tabular agents need this to size their tables.
    virtual std::optional<int> num_states() const = 0;

    virtual void reset(std::uint64_t seed) = 0;

    /// Performs one action; returns the reward and advances the state.
    virtual double step(int action) = 0;

    /// Canonical id of the current state (only meaningful when num_states
    /// is available).
    virtual std::int64_t state_id() const = 0;

    /// Feature encoding of the current state; injective on the reachable
    /// set for exportable environments.
    virtual std::vector<double> features() const = 0;

    /// Feature encoding of an arbitrary canonical state id (reference-state
    /// sweeps). Throws ContractError when ids are not enumerable.
    virtual std::vector<double> encode_state(std::int64_t state) const = 0;

    /// Fresh instance with identical configuration and an unseeded stream.
    virtual std::unique_ptr<Env> clone() const = 0;

    /// Exact kernel over the reachable state set. Throws CapExceededError,
    /// naming the offending count, when the reachable set cannot be
    /// enumerated within the cap.
    TabularExport to_tabular(std::size_t cap = kDefaultExportCap) const {
        return do_to_tabular(cap);
    }

protected:
    virtual TabularExport do_to_tabular(std::size_t cap) const = 0;
};

/// Environment view of a TabularMdp: state ids are MDP states, features are
/// one-hot. Runs start in state 0.
class MdpEnv : public Env {
public:
    explicit MdpEnv(TabularMdp mdp, int initial_state = 0);

    int num_actions() const override { return mdp_.num_actions(); }
    int feature_dim() const override { return mdp_.num_states(); }
    std::optional<int> num_states() const override { return mdp_.num_states(); }
    void reset(std::uint64_t seed) override;
    double step(int action) override;
    std::int64_t state_id() const override { return state_; }
    std::vector<double> features() const override { return encode_state(state_); }
    std::vector<double> encode_state(std::int64_t state) const override;
    std::unique_ptr<Env> clone() const override;

    const TabularMdp& mdp() const { return mdp_; }

protected:
    TabularExport do_to_tabular(std::size_t cap) const override;

private:
    TabularMdp mdp_;
    int initial_state_;
    int state_;
    Rng rng_{0};
};

struct AoiConfig {
    int num_sensors = 1;          // K
    int num_users = 1;            // N
    int delta_max = 8;
    double beta1 = 1.0;           // freshness weight
    double beta2 = 1.0;           // energy weight
    double request_prob = 0.5;    // per user-sensor Bernoulli request
    std::vector<double> energy_costs;   // per sensor; defaults to 1.0 each
    bool subset_actions = false;  // false: activate at most one sensor per slot
};

/// Status-update environment: an edge node caches one update per sensor,
/// users pull cached copies on random requests, and the controller pays
/// energy to refresh. State is the age of every cached and delivered copy;
/// reward is -(beta1 * mean user age + beta2 * energy spent).
class AoiEnv : public Env {
public:
    explicit AoiEnv(AoiConfig config);

    int num_actions() const override;
    int feature_dim() const override;
    std::optional<int> num_states() const override;
    void reset(std::uint64_t seed) override;
    double step(int action) override;
    std::int64_t state_id() const override;
    std::vector<double> features() const override;
    std::vector<double> encode_state(std::int64_t state) const override;
    std::unique_ptr<Env> clone() const override;

    const AoiConfig& config() const { return config_; }
    const std::vector<int>& ecn_aoi() const { return ecn_aoi_; }
    const std::vector<int>& user_aoi() const { return user_aoi_; }

protected:
    TabularExport do_to_tabular(std::size_t cap) const override;

private:
    std::vector<bool> activation_set(int action) const;
    double apply(int action, const std::vector<bool>& requests);

    AoiConfig config_;
    std::vector<int> ecn_aoi_;    // K entries in [1, delta_max]
    std::vector<int> user_aoi_;   // N*K entries, row-major by user
    Rng rng_{0};
};

/// Random MDP whose every (s, a) row mixes a random distribution with 5%
/// uniform mass over all states, so every policy induces an irreducible
/// (hence unichain) chain. Rewards are drawn per outcome from reward_range.
TabularMdp random_unichain(int num_states, int num_actions, std::uint64_t seed,
                           std::pair<double, double> reward_range = {0.0, 1.0});

/// Three-state witness that the discounted and average criteria disagree:
/// a reward-1 self-loop competes with a 3-cycle paying 10 once per lap.
TabularMdp delayed_payoff_mdp();

/// Parses the CLI environment grammar:
///   random:S=5,A=2,seed=7[,rmin=..,rmax=..]
///   delayed
///   aoi:K=2,N=2,dmax=8,b1=1,b2=1,p=0.5[,e=..,acts=onehot|subset]
///   file:<path to an MDP JSON document>
/// Parse errors name the offending field.
std::unique_ptr<Env> make_env(const std::string& spec);

}  // namespace averl
