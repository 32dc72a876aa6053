/* averl — average-reward reinforcement-learning laboratory.
 *
 * C interface of the shared library. All functions return an averl_status;
 * on failure averl_last_error() describes what went wrong (the message is
 * thread-local and valid until the next failing call on the same thread).
 * Strings returned through char** out-parameters are heap-allocated and
 * must be released with averl_string_free().
 */

#ifndef AVERL_H
#define AVERL_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum averl_status {
    AVERL_OK = 0,
    AVERL_ERR_INVALID_ARGUMENT = 1, /* null pointer or broken precondition */
    AVERL_ERR_PARSE = 2,            /* malformed JSON / spec string / CSV */
    AVERL_ERR_VALIDATION = 3,       /* MDP document failed validation */
    AVERL_ERR_NOT_UNICHAIN = 4,     /* chain has several recurrent classes */
    AVERL_ERR_CAP_EXCEEDED = 5,     /* enumeration or export over its cap */
    AVERL_ERR_NO_CONVERGENCE = 6,   /* iterative solver ran out of budget */
    AVERL_ERR_IO = 7,               /* file could not be read or written */
    AVERL_ERR_INTERNAL = 8
} averl_status;

/* Opaque finite MDP handle. */
typedef struct averl_mdp averl_mdp;

const char* averl_status_name(averl_status status);
const char* averl_last_error(void);
void averl_string_free(char* s);

/* --- MDP construction ---------------------------------------------------
 * Documents use the kernel format
 *   {"num_states": n, "num_actions": m,
 *    "kernel": [[[ [s_next, reward, prob], ... ] per action ] per state]}
 * and are validated on load. Environment spec strings follow the grammar
 *   random:S=5,A=2,seed=7 | delayed | aoi:K=2,N=2,dmax=8,b1=1,b2=1,p=0.5
 *   | file:<path>
 * where averl_mdp_from_env_spec exports the environment's exact reachable
 * kernel.
 */
averl_status averl_mdp_from_json(const char* json_text, averl_mdp** out);
averl_status averl_mdp_from_file(const char* path, averl_mdp** out);
averl_status averl_mdp_from_env_spec(const char* spec, averl_mdp** out);
void averl_mdp_free(averl_mdp* mdp);

int averl_mdp_num_states(const averl_mdp* mdp);
int averl_mdp_num_actions(const averl_mdp* mdp);
averl_status averl_mdp_to_json(const averl_mdp* mdp, char** json_out);

/* Violation report as a JSON array of strings (empty array: valid). */
averl_status averl_mdp_validate(const averl_mdp* mdp, char** report_json_out);

/* --- Exact solving --------------------------------------------------------
 * options_json: {"criterion": "average" | "discounted",
 *                "gamma": g, "tol": t, "ref_state": s}
 * gamma is required for the discounted criterion; tol defaults to 1e-8 and
 * ref_state to 0. The result is
 *   average:    {"gain": g, "policy": [...], "residual": r, "iterations": n}
 *   discounted: {"values": [...], "policy": [...], "residual": r,
 *                "iterations": n}
 */
averl_status averl_solve(const averl_mdp* mdp, const char* options_json, char** result_json_out);

/* Gap table: for each gamma (comma-separated list), the discounted-greedy
 * policy, its average reward, the optimal gain, and the gap. */
averl_status averl_gap_report(const averl_mdp* mdp, const char* gammas_csv,
                              char** result_json_out);

/* --- Training -------------------------------------------------------------
 * config_json holds {"agent": "q|rviq|rlearn|ddr|ddrviq|ddqn", ...agent
 * fields...}; the run's evaluation series is returned as CSV text
 * (columns step,eval_avg_reward,u_tilde,seed, plus loss,target_syncs for
 * deep agents).
 */
averl_status averl_train(const char* env_spec, const char* config_json, char** csv_out);

/* Multi-seed / multi-reference experiment described by a JSON document
 * mirroring the `run` CLI subcommand; returns the manifest JSON and, when
 * the config names an out_dir, persists one CSV per cell plus
 * manifest.json. */
averl_status averl_run_experiment(const char* config_json, char** manifest_json_out);

/* Pointwise mean/min/max envelope over every OK record in a directory
 * written by averl_run_experiment; returns CSV (step,mean,min,max). */
averl_status averl_aggregate_dir(const char* dir, char** csv_out);

/* Tail summary of one run CSV: {"mean": m, "std": s, "n": tail}. */
averl_status averl_summarize_csv(const char* csv_path, int tail, char** result_json_out);

#ifdef __cplusplus
}
#endif

#endif /* AVERL_H */
