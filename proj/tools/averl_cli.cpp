// Command-line front end for the averl shared library. Talks to the C API
// only; every subcommand maps onto one library call.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "averl.h"

namespace {

struct MdpHandle {
    averl_mdp* ptr = nullptr;
    ~MdpHandle() { averl_mdp_free(ptr); }
};

struct StringOut {
    char* ptr = nullptr;
    ~StringOut() { averl_string_free(ptr); }
};

int report_failure(averl_status status) {
    std::cerr << "error (" << averl_status_name(status) << "): " << averl_last_error()
              << std::endl;
    return 1;
}

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << path << std::endl;
        std::exit(1);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

// crude key lookup for flag overrides; avoids a JSON dependency in the CLI
std::string inject_agent(const std::string& config_json, const std::string& agent) {
    std::string body = config_json;
    const auto open = body.find('{');
    if (open == std::string::npos) return body;
    return body.substr(0, open + 1) + "\"agent\":\"" + agent + "\"," + body.substr(open + 1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"averl: average-reward reinforcement learning laboratory"};
    app.require_subcommand(1);

    // solve
    std::string solve_mdp, solve_criterion = "average";
    double solve_gamma = 0.9, solve_tol = 1e-8;
    int solve_ref = 0;
    bool solve_has_gamma = false;
    auto* solve = app.add_subcommand("solve", "exact dynamic programming on an MDP file");
    solve->add_option("--mdp", solve_mdp, "MDP JSON document")->required();
    solve->add_option("--criterion", solve_criterion, "average | discounted")
        ->check(CLI::IsMember({"average", "discounted"}));
    solve->add_option("--gamma", solve_gamma, "discount factor (discounted criterion)")
        ->each([&](const std::string&) { solve_has_gamma = true; });
    solve->add_option("--tol", solve_tol, "solver tolerance");
    solve->add_option("--ref-state", solve_ref, "reference state (average criterion)");

    // train
    std::string train_agent, train_env, train_config, train_out;
    auto* train = app.add_subcommand("train", "train one agent, emitting an evaluation CSV");
    train->add_option("--agent", train_agent, "q | rviq | rlearn | ddr | ddrviq | ddqn")
        ->required()
        ->check(CLI::IsMember({"q", "rviq", "rlearn", "ddr", "ddrviq", "ddqn"}));
    train->add_option("--env", train_env, "environment spec string")->required();
    train->add_option("--config", train_config, "agent config JSON file")->required();
    train->add_option("--out", train_out, "output CSV path (stdout if omitted)");

    // run
    std::string run_config;
    auto* run = app.add_subcommand("run", "run a multi-seed experiment from a config document");
    run->add_option("config", run_config, "experiment config JSON file")->required();

    // aggregate
    std::string agg_dir, agg_out;
    auto* aggregate =
        app.add_subcommand("aggregate", "mean/min/max envelope over an experiment directory");
    aggregate->add_option("dir", agg_dir, "directory containing manifest.json")->required();
    aggregate->add_option("--out", agg_out, "output CSV path (stdout if omitted)");

    // summarize
    std::string sum_csv;
    int sum_tail = 10;
    auto* summarize = app.add_subcommand("summarize", "tail mean/std of one run CSV");
    summarize->add_option("csv", sum_csv, "run CSV file")->required();
    summarize->add_option("--tail", sum_tail, "number of trailing evaluations");

    // gap
    std::string gap_mdp, gap_gammas = "0.1,0.5,0.9,0.99,0.999";
    auto* gap = app.add_subcommand("gap", "criterion gap per discount factor");
    gap->add_option("--mdp", gap_mdp, "MDP JSON document")->required();
    gap->add_option("--gammas", gap_gammas, "comma-separated discount factors");

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        MdpHandle mdp;
        if (auto st = averl_mdp_from_file(solve_mdp.c_str(), &mdp.ptr)) return report_failure(st);
        char opts[256];
        if (solve_criterion == "discounted") {
            if (!solve_has_gamma) {
                std::cerr << "error: --criterion discounted requires --gamma" << std::endl;
                return 1;
            }
            std::snprintf(opts, sizeof(opts),
                          "{\"criterion\":\"discounted\",\"gamma\":%.17g,\"tol\":%.17g}",
                          solve_gamma, solve_tol);
        } else {
            std::snprintf(opts, sizeof(opts),
                          "{\"criterion\":\"average\",\"tol\":%.17g,\"ref_state\":%d}",
                          solve_tol, solve_ref);
        }
        StringOut result;
        if (auto st = averl_solve(mdp.ptr, opts, &result.ptr)) return report_failure(st);
        std::cout << result.ptr << std::endl;
        return 0;
    }

    if (train->parsed()) {
        const std::string config = inject_agent(read_file_or_die(train_config), train_agent);
        StringOut csv;
        if (auto st = averl_train(train_env.c_str(), config.c_str(), &csv.ptr))
            return report_failure(st);
        if (train_out.empty()) {
            std::cout << csv.ptr;
        } else if (!write_file(train_out, csv.ptr)) {
            std::cerr << "error: cannot write " << train_out << std::endl;
            return 1;
        }
        return 0;
    }

    if (run->parsed()) {
        const std::string config = read_file_or_die(run_config);
        StringOut manifest;
        if (auto st = averl_run_experiment(config.c_str(), &manifest.ptr))
            return report_failure(st);
        std::cout << manifest.ptr << std::endl;
        return 0;
    }

    if (aggregate->parsed()) {
        StringOut csv;
        if (auto st = averl_aggregate_dir(agg_dir.c_str(), &csv.ptr)) return report_failure(st);
        if (agg_out.empty()) {
            std::cout << csv.ptr;
        } else if (!write_file(agg_out, csv.ptr)) {
            std::cerr << "error: cannot write " << agg_out << std::endl;
            return 1;
        }
        return 0;
    }

    if (summarize->parsed()) {
        StringOut result;
        if (auto st = averl_summarize_csv(sum_csv.c_str(), sum_tail, &result.ptr))
            return report_failure(st);
        std::cout << result.ptr << std::endl;
        return 0;
    }

    if (gap->parsed()) {
        MdpHandle mdp;
        if (auto st = averl_mdp_from_file(gap_mdp.c_str(), &mdp.ptr)) return report_failure(st);
        StringOut result;
        if (auto st = averl_gap_report(mdp.ptr, gap_gammas.c_str(), &result.ptr))
            return report_failure(st);
        std::cout << result.ptr << std::endl;
        return 0;
    }

    return 0;
}
