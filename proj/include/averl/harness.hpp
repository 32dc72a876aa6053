#pragma once

#include <string>
#include <vector>

#include "averl/deep.hpp"
#include "averl/record.hpp"
#include "averl/solvers.hpp"
#include "averl/tabular.hpp"

namespace averl {

/// A seeds x reference-states grid of training runs for one agent on one
/// environment.
struct ExperimentConfig {
    std::string env_spec;
    std::string agent;                 // q | rviq | rlearn | ddr | ddrviq | ddqn
    LearningConfig tabular;            // used by the tabular agents
    DeepAgentConfig deep;              // used by the deep agents
    std::vector<std::uint64_t> seeds = {0};
    std::vector<int> ref_states;                    // optional sweep (rviq / ddrviq)
    std::vector<std::vector<double>> ref_features;  // optional sweep (ddrviq)
    std::string out_dir;               // empty: keep records in memory only

    bool is_deep() const;
    void check() const;
};

ExperimentConfig experiment_from_json(const std::string& text);
/// Canonical (defaults filled, keys sorted) rendering; content-hashed for
/// record identity.
std::string experiment_to_json(const ExperimentConfig& config);
std::string experiment_hash(const ExperimentConfig& config);

LearningConfig learning_config_from_json(const std::string& text);
DeepAgentConfig deep_config_from_json(const std::string& text);

struct CellStatus {
    std::uint64_t seed = 0;
    std::string ref_id;
    bool ok = false;
    std::string error;
    std::string file;   // CSV path when persisted
};

struct ExperimentResult {
    std::vector<RunRecord> records;   // successful cells, grid order
    std::vector<CellStatus> cells;    // every cell, grid order
    std::string manifest_json;
};

/// Runs every (seed x ref) cell independently; a failing cell is recorded
/// and does not abort its siblings. When out_dir is set, writes one CSV per
/// record plus manifest.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct EnvelopePoint {
    long long step = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Pointwise mean/min/max across runs; requires identical evaluation step
/// grids.
std::vector<EnvelopePoint> aggregate_envelope(const std::vector<RunRecord>& records);

std::string envelope_to_csv(const std::vector<EnvelopePoint>& envelope);

/// Mean and population standard deviation of the last n evaluation scores.
std::pair<double, double> summarize_tail(const RunRecord& record, int n);

struct GapRow {
    double gamma = 0.0;
    std::vector<int> policy;       // discounted-greedy action per state
    long long policy_id = 0;       // lexicographic rank of the action tuple
    double avg_reward = 0.0;       // average reward achieved by that policy
    double optimal_gain = 0.0;
    double gap = 0.0;              // optimal_gain - avg_reward, >= 0
};

/// For each gamma: the discounted-greedy policy, its average reward, and
/// its shortfall against the gain-optimal policy.
std::vector<GapRow> gap_report(const TabularMdp& mdp, const std::vector<double>& gammas);

/// Loads every OK record listed in <dir>/manifest.json.
std::vector<RunRecord> load_records_from_dir(const std::string& dir);

}  // namespace averl
