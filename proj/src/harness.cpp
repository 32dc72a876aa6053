#include "averl/harness.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "averl/serialize.hpp"

namespace averl {

using nlohmann::json;

namespace {

json parse_object(const std::string& text, const std::string& what) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(what + ": expected a JSON object");
    return doc;
}

template <class T>
void read_field(const json& doc, const char* key, T& out, const std::string& what) {
    if (!doc.contains(key)) return;
    try {
        out = doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(what + ": field '" + std::string(key) + "' has the wrong type");
    }
}

LearningConfig learning_config_from(const json& doc) {
    LearningConfig c;
    const std::string what = "agent config";
    read_field(doc, "alpha", c.alpha, what);
    read_field(doc, "alpha_u", c.alpha_u, what);
    read_field(doc, "epsilon", c.epsilon, what);
    read_field(doc, "gamma", c.gamma, what);
    read_field(doc, "ref_state", c.ref_state, what);
    read_field(doc, "steps", c.steps, what);
    read_field(doc, "eval_every", c.eval_every, what);
    read_field(doc, "eval_len", c.eval_len, what);
    read_field(doc, "eval_burnin", c.eval_burnin, what);
    read_field(doc, "seed", c.seed, what);
    read_field(doc, "epsilon_final", c.epsilon_final, what);
    read_field(doc, "epsilon_anneal_steps", c.epsilon_anneal_steps, what);
    read_field(doc, "alpha_final", c.alpha_final, what);
    read_field(doc, "alpha_anneal_steps", c.alpha_anneal_steps, what);
    return c;
}

json learning_config_to(const LearningConfig& c) {
    return json{{"alpha", c.alpha},
                {"alpha_u", c.alpha_u},
                {"epsilon", c.epsilon},
                {"gamma", c.gamma},
                {"ref_state", c.ref_state},
                {"steps", c.steps},
                {"eval_every", c.eval_every},
                {"eval_len", c.eval_len},
                {"eval_burnin", c.eval_burnin},
                {"seed", c.seed},
                {"epsilon_final", c.epsilon_final},
                {"epsilon_anneal_steps", c.epsilon_anneal_steps},
                {"alpha_final", c.alpha_final},
                {"alpha_anneal_steps", c.alpha_anneal_steps}};
}

DeepAgentConfig deep_config_from(const json& doc) {
    DeepAgentConfig c;
    const std::string what = "agent config";
    read_field(doc, "hidden", c.hidden, what);
    read_field(doc, "lr", c.lr, what);
    read_field(doc, "optimizer", c.optimizer, what);
    read_field(doc, "gamma", c.gamma, what);
    read_field(doc, "alpha_u", c.alpha_u, what);
    read_field(doc, "batch_size", c.batch_size, what);
    read_field(doc, "buffer_capacity", c.buffer_capacity, what);
    read_field(doc, "target_sync_every", c.target_sync_every, what);
    read_field(doc, "epsilon", c.epsilon, what);
    read_field(doc, "epsilon_final", c.epsilon_final, what);
    read_field(doc, "epsilon_anneal_steps", c.epsilon_anneal_steps, what);
    read_field(doc, "steps", c.steps, what);
    read_field(doc, "eval_every", c.eval_every, what);
    read_field(doc, "eval_horizon", c.eval_horizon, what);
    read_field(doc, "eval_burnin", c.eval_burnin, what);
    read_field(doc, "seed", c.seed, what);
    read_field(doc, "ref_features", c.ref_features, what);
    read_field(doc, "ref_state", c.ref_state, what);
    read_field(doc, "checkpoint_out", c.checkpoint_out, what);
    read_field(doc, "checkpoint_in", c.checkpoint_in, what);
    return c;
}

json deep_config_to(const DeepAgentConfig& c) {
    return json{{"hidden", c.hidden},
                {"lr", c.lr},
                {"optimizer", c.optimizer},
                {"gamma", c.gamma},
                {"alpha_u", c.alpha_u},
                {"batch_size", c.batch_size},
                {"buffer_capacity", c.buffer_capacity},
                {"target_sync_every", c.target_sync_every},
                {"epsilon", c.epsilon},
                {"epsilon_final", c.epsilon_final},
                {"epsilon_anneal_steps", c.epsilon_anneal_steps},
                {"steps", c.steps},
                {"eval_every", c.eval_every},
                {"eval_horizon", c.eval_horizon},
                {"eval_burnin", c.eval_burnin},
                {"seed", c.seed},
                {"ref_features", c.ref_features},
                {"ref_state", c.ref_state},
                {"checkpoint_out", c.checkpoint_out},
                {"checkpoint_in", c.checkpoint_in}};
}

}  // namespace

LearningConfig learning_config_from_json(const std::string& text) {
    return learning_config_from(parse_object(text, "agent config"));
}

DeepAgentConfig deep_config_from_json(const std::string& text) {
    return deep_config_from(parse_object(text, "agent config"));
}

bool ExperimentConfig::is_deep() const {
    return agent == "ddr" || agent == "ddrviq" || agent == "ddqn";
}

void ExperimentConfig::check() const {
    if (seeds.empty()) throw ContractError("experiment needs at least one seed");
    if (!ref_states.empty() && !ref_features.empty())
        throw ContractError("experiment may sweep ref_states or ref_features, not both");
    const bool has_refs = !ref_states.empty() || !ref_features.empty();
    if (has_refs && agent != "rviq" && agent != "ddrviq")
        throw ContractError("reference sweeps only apply to rviq/ddrviq agents");
    if (!ref_features.empty() && agent != "ddrviq")
        throw ContractError("ref_features sweeps only apply to ddrviq");
    if (is_deep()) deep.check();
    else { tabular_agent_from_name(agent); tabular.check(); }
}

ExperimentConfig experiment_from_json(const std::string& text) {
    const json doc = parse_object(text, "experiment config");
    ExperimentConfig c;
    const std::string what = "experiment config";
    if (!doc.contains("env") || !doc.contains("agent"))
        throw ParseError(what + ": 'env' and 'agent' are required");
    read_field(doc, "env", c.env_spec, what);
    read_field(doc, "agent", c.agent, what);
    read_field(doc, "seeds", c.seeds, what);
    read_field(doc, "ref_states", c.ref_states, what);
    read_field(doc, "ref_features", c.ref_features, what);
    read_field(doc, "out_dir", c.out_dir, what);
    if (doc.contains("agent_config")) {
        if (c.is_deep()) c.deep = deep_config_from(doc.at("agent_config"));
        else c.tabular = learning_config_from(doc.at("agent_config"));
    }
    return c;
}

std::string experiment_to_json(const ExperimentConfig& config) {
    json doc = {{"env", config.env_spec},
                {"agent", config.agent},
                {"seeds", config.seeds},
                {"ref_states", config.ref_states},
                {"ref_features", config.ref_features},
                {"out_dir", config.out_dir},
                {"agent_config", config.is_deep() ? deep_config_to(config.deep)
                                                  : learning_config_to(config.tabular)}};
    return doc.dump();
}

std::string experiment_hash(const ExperimentConfig& config) {
    return content_digest(experiment_to_json(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.check();
    const std::string hash = experiment_hash(config);
    const bool sweep_states = !config.ref_states.empty();
    const bool sweep_features = !config.ref_features.empty();
    const std::size_t num_refs =
        sweep_states ? config.ref_states.size() : (sweep_features ? config.ref_features.size() : 1);
    const bool persist = !config.out_dir.empty();
    if (persist) std::filesystem::create_directories(config.out_dir);

    ExperimentResult result;
    json manifest_records = json::array();
    for (std::size_t ri = 0; ri < num_refs; ++ri) {
        const std::string ref_id =
            (sweep_states || sweep_features) ? "r" + std::to_string(ri) : "";
        for (const std::uint64_t seed : config.seeds) {
            CellStatus cell;
            cell.seed = seed;
            cell.ref_id = ref_id;
            try {
                // a fresh environment per cell keeps cells order-independent
                auto env = make_env(config.env_spec);
                RunRecord record;
                if (config.is_deep()) {
                    DeepAgentConfig cfg = config.deep;
                    cfg.seed = seed;
                    if (sweep_features) cfg.ref_features = config.ref_features[ri];
                    else if (sweep_states)
                        cfg.ref_features = env->encode_state(config.ref_states[ri]);
                    else if (config.agent == "ddrviq" && cfg.ref_features.empty())
                        cfg.ref_features = env->encode_state(cfg.ref_state);
                    record = train_deep(deep_agent_from_name(config.agent), *env, cfg);
                } else {
                    LearningConfig cfg = config.tabular;
                    cfg.seed = seed;
                    if (sweep_states) cfg.ref_state = config.ref_states[ri];
                    record = train_tabular(tabular_agent_from_name(config.agent), *env, cfg);
                }
                record.ref_id = ref_id;
                record.config_hash = hash;
                cell.ok = true;
                if (persist) {
                    std::string name = "run_s" + std::to_string(seed);
                    if (!ref_id.empty()) name += "_" + ref_id;
                    name += ".csv";
                    const std::string csv = record_to_csv(record, config.is_deep());
                    write_text_file((std::filesystem::path(config.out_dir) / name).string(), csv);
                    cell.file = name;
                    manifest_records.push_back(json{{"file", name},
                                                    {"seed", seed},
                                                    {"ref_id", ref_id},
                                                    {"status", "ok"},
                                                    {"digest", content_digest(csv)}});
                }
                result.records.push_back(std::move(record));
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
                if (persist)
                    manifest_records.push_back(json{{"file", ""},
                                                    {"seed", seed},
                                                    {"ref_id", ref_id},
                                                    {"status", std::string("error: ") + e.what()},
                                                    {"digest", ""}});
            }
            result.cells.push_back(std::move(cell));
        }
    }
    json manifest = {{"config_hash", hash},
                     {"env", config.env_spec},
                     {"agent", config.agent},
                     {"deep", config.is_deep()},
                     {"records", std::move(manifest_records)}};
    result.manifest_json = manifest.dump(2);
    if (persist)
        write_text_file((std::filesystem::path(config.out_dir) / "manifest.json").string(),
                        result.manifest_json);
    return result;
}

std::vector<EnvelopePoint> aggregate_envelope(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ContractError("aggregate_envelope: no records");
    const auto& grid = records.front().points;
    for (const auto& r : records) {
        if (r.points.size() != grid.size())
            throw ContractError("aggregate_envelope: records have mismatched step grids");
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (r.points[i].step != grid[i].step)
                throw ContractError("aggregate_envelope: records have mismatched step grids");
    }
    std::vector<EnvelopePoint> envelope(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EnvelopePoint& p = envelope[i];
        p.step = grid[i].step;
        p.min = p.max = records.front().points[i].eval_avg_reward;
        double total = 0.0;
        for (const auto& r : records) {
            const double x = r.points[i].eval_avg_reward;
            total += x;
            p.min = std::min(p.min, x);
            p.max = std::max(p.max, x);
        }
        p.mean = total / static_cast<double>(records.size());
    }
    return envelope;
}

std::string envelope_to_csv(const std::vector<EnvelopePoint>& envelope) {
    std::string out = "step,mean,min,max\n";
    char buf[128];
    for (const auto& p : envelope) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n", p.step, p.mean, p.min, p.max);
        out += buf;
    }
    return out;
}

std::pair<double, double> summarize_tail(const RunRecord& record, int n) {
    if (n <= 0) throw ContractError("summarize_tail: n must be > 0");
    if (static_cast<int>(record.points.size()) < n)
        throw ContractError("summarize_tail: series has " +
                            std::to_string(record.points.size()) + " points, need " +
                            std::to_string(n));
    const std::size_t start = record.points.size() - static_cast<std::size_t>(n);
    double mean = 0.0;
    for (std::size_t i = start; i < record.points.size(); ++i)
        mean += record.points[i].eval_avg_reward;
    mean /= n;
    double var = 0.0;
    for (std::size_t i = start; i < record.points.size(); ++i) {
        const double d = record.points[i].eval_avg_reward - mean;
        var += d * d;
    }
    var /= n;   // population variance
    return {mean, std::sqrt(var)};
}

std::vector<GapRow> gap_report(const TabularMdp& mdp, const std::vector<double>& gammas) {
    const auto [opt_policy, opt_gain] = brute_force_gain_optimal(mdp);
    std::vector<GapRow> rows;
    rows.reserve(gammas.size());
    for (const double gamma : gammas) {
        const DiscountedSolution sol = discounted_value_iteration(mdp, gamma, 1e-10);
        GapRow row;
        row.gamma = gamma;
        row.policy = sol.policy.actions();
        row.policy_id = 0;
        for (int a : row.policy)
            row.policy_id = row.policy_id * mdp.num_actions() + a;
        row.avg_reward = average_reward(mdp, sol.policy);
        row.optimal_gain = opt_gain;
        row.gap = opt_gain - row.avg_reward;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RunRecord> load_records_from_dir(const std::string& dir) {
    const auto manifest_path = std::filesystem::path(dir) / "manifest.json";
    const json manifest = parse_object(read_text_file(manifest_path.string()), "manifest");
    std::vector<RunRecord> records;
    std::string hash;
    read_field(manifest, "config_hash", hash, "manifest");
    if (!manifest.contains("records")) throw ParseError("manifest: missing 'records'");
    for (const auto& entry : manifest.at("records")) {
        if (entry.at("status").get<std::string>() != "ok") continue;
        const std::string file = entry.at("file").get<std::string>();
        RunRecord r = record_from_csv(read_text_file((std::filesystem::path(dir) / file).string()));
        read_field(entry, "ref_id", r.ref_id, "manifest");
        r.config_hash = hash;
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace averl
