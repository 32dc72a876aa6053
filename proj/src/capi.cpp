#include "averl.h"

#include <cstring>
#include <sstream>
#include <string>

#include <json.hpp>

#include "averl/env.hpp"
#include "averl/harness.hpp"
#include "averl/serialize.hpp"
#include "averl/solvers.hpp"

using nlohmann::json;

struct averl_mdp {
    averl::TabularMdp mdp;
};

namespace {

thread_local std::string g_last_error;

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

averl_status fail(averl_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

/// Runs fn, translating exceptions into status codes.
template <class Fn>
averl_status guarded(Fn&& fn) {
    try {
        fn();
        return AVERL_OK;
    } catch (const averl::ValidationError& e) {
        return fail(AVERL_ERR_VALIDATION, e.what());
    } catch (const averl::ParseError& e) {
        return fail(AVERL_ERR_PARSE, e.what());
    } catch (const averl::NotUnichainError& e) {
        return fail(AVERL_ERR_NOT_UNICHAIN, e.what());
    } catch (const averl::CapExceededError& e) {
        return fail(AVERL_ERR_CAP_EXCEEDED, e.what());
    } catch (const averl::ConvergenceError& e) {
        return fail(AVERL_ERR_NO_CONVERGENCE, e.what());
    } catch (const averl::IoError& e) {
        return fail(AVERL_ERR_IO, e.what());
    } catch (const averl::ContractError& e) {
        return fail(AVERL_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(AVERL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(AVERL_ERR_INTERNAL, "unknown error");
    }
}

averl_status require(bool ok, const char* message) {
    return ok ? AVERL_OK : fail(AVERL_ERR_INVALID_ARGUMENT, message);
}

std::vector<double> parse_gammas(const std::string& csv) {
    std::vector<double> gammas;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            gammas.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw averl::ParseError("gammas: '" + item + "' is not a number");
        }
    }
    if (gammas.empty()) throw averl::ParseError("gammas: empty list");
    return gammas;
}

}  // namespace

extern "C" {

const char* averl_status_name(averl_status status) {
    switch (status) {
        case AVERL_OK: return "ok";
        case AVERL_ERR_INVALID_ARGUMENT: return "invalid argument";
        case AVERL_ERR_PARSE: return "parse error";
        case AVERL_ERR_VALIDATION: return "validation error";
        case AVERL_ERR_NOT_UNICHAIN: return "not unichain";
        case AVERL_ERR_CAP_EXCEEDED: return "cap exceeded";
        case AVERL_ERR_NO_CONVERGENCE: return "no convergence";
        case AVERL_ERR_IO: return "io error";
        case AVERL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* averl_last_error(void) { return g_last_error.c_str(); }

void averl_string_free(char* s) { delete[] s; }

averl_status averl_mdp_from_json(const char* json_text, averl_mdp** out) {
    if (auto st = require(json_text && out, "averl_mdp_from_json: null argument")) return st;
    return guarded([&] { *out = new averl_mdp{averl::parse_mdp_json(json_text)}; });
}

averl_status averl_mdp_from_file(const char* path, averl_mdp** out) {
    if (auto st = require(path && out, "averl_mdp_from_file: null argument")) return st;
    return guarded([&] { *out = new averl_mdp{averl::load_mdp_file(path)}; });
}

averl_status averl_mdp_from_env_spec(const char* spec, averl_mdp** out) {
    if (auto st = require(spec && out, "averl_mdp_from_env_spec: null argument")) return st;
    return guarded([&] {
        auto env = averl::make_env(spec);
        *out = new averl_mdp{env->to_tabular().mdp};
    });
}

void averl_mdp_free(averl_mdp* mdp) { delete mdp; }

int averl_mdp_num_states(const averl_mdp* mdp) { return mdp ? mdp->mdp.num_states() : 0; }

int averl_mdp_num_actions(const averl_mdp* mdp) { return mdp ? mdp->mdp.num_actions() : 0; }

averl_status averl_mdp_to_json(const averl_mdp* mdp, char** json_out) {
    if (auto st = require(mdp && json_out, "averl_mdp_to_json: null argument")) return st;
    return guarded([&] { *json_out = copy_string(averl::mdp_to_json(mdp->mdp)); });
}

averl_status averl_mdp_validate(const averl_mdp* mdp, char** report_json_out) {
    if (auto st = require(mdp && report_json_out, "averl_mdp_validate: null argument")) return st;
    return guarded([&] {
        const json report = averl::validate(mdp->mdp);
        *report_json_out = copy_string(report.dump());
    });
}

averl_status averl_solve(const averl_mdp* mdp, const char* options_json,
                         char** result_json_out) {
    if (auto st = require(mdp && options_json && result_json_out, "averl_solve: null argument"))
        return st;
    return guarded([&] {
        json opts;
        try {
            opts = json::parse(options_json);
        } catch (const json::parse_error& e) {
            throw averl::ParseError(std::string("solve options: ") + e.what());
        }
        const std::string criterion = opts.value("criterion", std::string("average"));
        const double tol = opts.value("tol", 1e-8);
        json result;
        if (criterion == "average") {
            const int ref_state = opts.value("ref_state", 0);
            const averl::GainBias sol =
                averl::relative_value_iteration(mdp->mdp, ref_state, tol);
            result = {{"gain", sol.gain},
                      {"policy", sol.policy.actions()},
                      {"residual", sol.residual},
                      {"iterations", sol.iterations}};
        } else if (criterion == "discounted") {
            if (!opts.contains("gamma"))
                throw averl::ContractError("solve: discounted criterion requires gamma");
            const double gamma = opts.at("gamma").get<double>();
            const averl::DiscountedSolution sol =
                averl::discounted_value_iteration(mdp->mdp, gamma, tol);
            std::vector<double> values(sol.values.data(), sol.values.data() + sol.values.size());
            result = {{"values", values},
                      {"policy", sol.policy.actions()},
                      {"residual", sol.residual},
                      {"iterations", sol.iterations}};
        } else {
            throw averl::ContractError("solve: criterion must be 'average' or 'discounted'");
        }
        *result_json_out = copy_string(result.dump());
    });
}

averl_status averl_gap_report(const averl_mdp* mdp, const char* gammas_csv,
                              char** result_json_out) {
    if (auto st =
            require(mdp && gammas_csv && result_json_out, "averl_gap_report: null argument"))
        return st;
    return guarded([&] {
        const auto rows = averl::gap_report(mdp->mdp, parse_gammas(gammas_csv));
        json out = json::array();
        for (const auto& row : rows)
            out.push_back(json{{"gamma", row.gamma},
                               {"policy", row.policy},
                               {"policy_id", row.policy_id},
                               {"avg_reward", row.avg_reward},
                               {"optimal_gain", row.optimal_gain},
                               {"gap", row.gap}});
        *result_json_out = copy_string(out.dump());
    });
}

averl_status averl_train(const char* env_spec, const char* config_json, char** csv_out) {
    if (auto st = require(env_spec && config_json && csv_out, "averl_train: null argument"))
        return st;
    return guarded([&] {
        json cfg;
        try {
            cfg = json::parse(config_json);
        } catch (const json::parse_error& e) {
            throw averl::ParseError(std::string("train config: ") + e.what());
        }
        if (!cfg.contains("agent"))
            throw averl::ParseError("train config: missing 'agent'");
        const std::string agent = cfg.at("agent").get<std::string>();
        auto env = averl::make_env(env_spec);
        const bool deep = agent == "ddr" || agent == "ddrviq" || agent == "ddqn";
        averl::RunRecord record;
        if (deep) {
            averl::DeepAgentConfig c = averl::deep_config_from_json(config_json);
            if (agent == "ddrviq" && c.ref_features.empty())
                c.ref_features = env->encode_state(c.ref_state);
            record = averl::train_deep(averl::deep_agent_from_name(agent), *env, c);
        } else {
            averl::LearningConfig c = averl::learning_config_from_json(config_json);
            record = averl::train_tabular(averl::tabular_agent_from_name(agent), *env, c);
        }
        *csv_out = copy_string(averl::record_to_csv(record, deep));
    });
}

averl_status averl_run_experiment(const char* config_json, char** manifest_json_out) {
    if (auto st =
            require(config_json && manifest_json_out, "averl_run_experiment: null argument"))
        return st;
    return guarded([&] {
        const averl::ExperimentConfig config = averl::experiment_from_json(config_json);
        const averl::ExperimentResult result = averl::run_experiment(config);
        *manifest_json_out = copy_string(result.manifest_json);
    });
}

averl_status averl_aggregate_dir(const char* dir, char** csv_out) {
    if (auto st = require(dir && csv_out, "averl_aggregate_dir: null argument")) return st;
    return guarded([&] {
        const auto records = averl::load_records_from_dir(dir);
        *csv_out = copy_string(averl::envelope_to_csv(averl::aggregate_envelope(records)));
    });
}

averl_status averl_summarize_csv(const char* csv_path, int tail, char** result_json_out) {
    if (auto st =
            require(csv_path && result_json_out, "averl_summarize_csv: null argument"))
        return st;
    return guarded([&] {
        const averl::RunRecord record =
            averl::record_from_csv(averl::read_text_file(csv_path));
        const auto [mean, std_dev] = averl::summarize_tail(record, tail);
        const json out = {{"mean", mean}, {"std", std_dev}, {"n", tail}};
        *result_json_out = copy_string(out.dump());
    });
}

}  // extern "C"
