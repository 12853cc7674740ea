/*
 * peakrl C API.
 *
 * Opaque handles own C++ objects; every fallible call returns a prl_status and
 * leaves a message retrievable with prl_last_error() on the calling thread.
 * Strings returned through char** are heap-allocated and must be released with
 * prl_string_free().
 */
#ifndef PEAKRL_PEAKRL_H
#define PEAKRL_PEAKRL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PEAKRL_BUILDING)
#    define PRL_API __declspec(dllexport)
#  else
#    define PRL_API __declspec(dllimport)
#  endif
#else
#  define PRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum prl_status {
    PRL_OK = 0,
    PRL_ERR_INDEX = 1,
    PRL_ERR_ARGUMENT = 2,
    PRL_ERR_VALIDATION = 3,
    PRL_ERR_CAPABILITY = 4,
    PRL_ERR_NUMERIC = 5,
    PRL_ERR_INFEASIBLE = 6,
    PRL_ERR_CONFIG = 7,
    PRL_ERR_PARSE = 8,
    PRL_ERR_IO = 9,
    PRL_ERR_INTERNAL = 10
} prl_status;

typedef enum prl_mode { PRL_MODE_DISCOUNTED = 0, PRL_MODE_AVERAGE = 1 } prl_mode;

/* Mode argument meaning "derive from the instance" (discounted iff it has gamma). */
#define PRL_MODE_AUTO (-1)

typedef enum prl_verdict { PRL_FEASIBLE = 0, PRL_INFEASIBLE = 1, PRL_INCONCLUSIVE = 2 } prl_verdict;

typedef struct prl_instance prl_instance;
typedef struct prl_learner prl_learner;

PRL_API const char* prl_version(void);
PRL_API const char* prl_status_string(prl_status status);
/* Message of the last failing call on this thread; empty when none. */
PRL_API const char* prl_last_error(void);
PRL_API void prl_string_free(char* s);

/* ---- instances ---------------------------------------------------------- */

/* Loads an instance or environment spec document (type raw_mdp, wireless,
 * search_engine or random). */
PRL_API prl_status prl_instance_load_file(const char* path, prl_instance** out);
PRL_API prl_status prl_instance_from_json(const char* json, prl_instance** out);
PRL_API void prl_instance_free(prl_instance* inst);
PRL_API prl_status prl_instance_dims(const prl_instance* inst, size_t* n_states, size_t* n_actions,
                                     size_t* n_constraints);
PRL_API prl_status prl_instance_to_json(const prl_instance* inst, char** out);
/* Returns a new instance with reward r + c + epsilon and bound 2c + epsilon. */
PRL_API prl_status prl_instance_shift_reward(const prl_instance* inst, double epsilon, prl_instance** out);

/* ---- transform ---------------------------------------------------------- */

/* gamma is ignored in average mode. */
PRL_API prl_status prl_clip_bound(double c, double gamma, int mode, double* out);
PRL_API prl_status prl_transform_sample(double reward, const double* constraint_samples, size_t n_constraints,
                                        double clip_bound, double* out);

/* ---- commands (JSON reports) ------------------------------------------- */

/* all_passed receives 1 when every assumption check passed. */
PRL_API prl_status prl_validate(const prl_instance* inst, char** report_json, int* all_passed);
/* tol is relative to c; verdict receives a prl_verdict. */
PRL_API prl_status prl_solve(const prl_instance* inst, int mode, double tol, char** solution_json, int* verdict);
/* params_json: {"count","n_states","n_actions","n_constraints","mode","gamma","seed","tol"}. */
PRL_API prl_status prl_audit(const char* params_json, char** report_json, int* all_passed);
/* Experiment config document; base_dir resolves relative instance paths (may be NULL).
 * Writes metrics files into the configured output directory. */
PRL_API prl_status prl_learn(const char* config_json, const char* base_dir, char** summary_json);

/* ---- learner handles ---------------------------------------------------- */

/* learner_json is a learner block ({"mode", "omega", "schedule", "epsilon_floor", "f", "seed", ...}).
 * The learner keeps its own reference to the instance. */
PRL_API prl_status prl_learner_create(const prl_instance* inst, const char* learner_json, prl_learner** out);
PRL_API void prl_learner_free(prl_learner* learner);
/* Advances the online loop; violations (may be NULL) receives the number of
 * steps with some negative constraint sample. */
PRL_API prl_status prl_learner_run(prl_learner* learner, uint64_t steps, uint64_t* violations);
/* Copies the Q table (row-major, n_states * n_actions entries). */
PRL_API prl_status prl_learner_q(const prl_learner* learner, double* out, size_t len);
PRL_API prl_status prl_learner_visits(const prl_learner* learner, uint64_t* out, size_t len);
/* Persistent state size in bytes (Q table, visit counts, scalars). */
PRL_API prl_status prl_learner_state_size(const prl_learner* learner, size_t* bytes);

#ifdef __cplusplus
}
#endif

#endif /* PEAKRL_PEAKRL_H */
