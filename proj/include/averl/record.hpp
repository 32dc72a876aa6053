#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace averl {

/// One evaluation snapshot taken during training.
struct EvalPoint {
    long long step = 0;
    double eval_avg_reward = 0.0;
    std::optional<double> u_tilde;        // R-learning agents only
    std::optional<double> loss;           // deep agents only
    std::optional<long long> target_syncs;
};

/// The unit of experiment output: an evaluation time-series plus the
/// identity of the run that produced it.
struct RunRecord {
    std::vector<EvalPoint> points;
    std::uint64_t seed = 0;
    std::string ref_id;        // reference-state sweeps; empty otherwise
    std::string config_hash;
};

/// CSV serialization. Tabular schema: step,eval_avg_reward,u_tilde,seed.
/// Deep runs append loss,target_syncs. Numbers are printed with 17
/// significant digits so a reread reproduces the record bit-exactly.
std::string record_to_csv(const RunRecord& record, bool deep_columns);
RunRecord record_from_csv(const std::string& text);

}  // namespace averl
