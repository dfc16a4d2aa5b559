/* psim: persona-conditioned sales dialogue simulation, C interface. */
#ifndef PSIM_PSIM_H
#define PSIM_PSIM_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(PSIM_BUILDING_LIBRARY)
#    define PSIM_API __declspec(dllexport)
#  else
#    define PSIM_API __declspec(dllimport)
#  endif
#else
#  define PSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psim_status {
  PSIM_OK = 0,
  PSIM_ERR_INVALID_ARGUMENT = 1,
  PSIM_ERR_CONFIG = 2,
  PSIM_ERR_IO = 3,
  PSIM_ERR_PARSE = 4,
  PSIM_ERR_NO_JSON_FOUND = 5,
  PSIM_ERR_MALFORMED_JSON = 6,
  PSIM_ERR_TRANSPORT = 7,
  PSIM_ERR_RATE_LIMITED = 8,
  PSIM_ERR_MALFORMED_RESPONSE = 9,
  PSIM_ERR_AUTH_MISSING = 10,
  PSIM_ERR_REPLAY_MISS = 11,
  PSIM_ERR_SCRIPT_EXHAUSTED = 12,
  PSIM_ERR_PERSONA_GENERATION_FAILED = 13,
  PSIM_ERR_ABORT_THRESHOLD = 14,
  PSIM_ERR_STATS_DOMAIN = 15,
  PSIM_ERR_DEGENERATE = 16,
  PSIM_ERR_INTERNAL = 99
} psim_status;

typedef struct psim_context psim_context;

PSIM_API const char* psim_version(void);
PSIM_API const char* psim_status_name(psim_status status);

/* Message of the last failed call on this thread; "" when none. */
PSIM_API const char* psim_last_error(void);

/* Frees strings returned through char** out parameters. */
PSIM_API void psim_string_free(char* s);

/* 0 = warnings, 1 = progress, 2 = debug. Logs go to stderr. */
PSIM_API void psim_set_verbosity(int level);

/* Run contexts. The config is a JSON run configuration. */
PSIM_API psim_status psim_context_create(const char* config_json, psim_context** out);
PSIM_API psim_status psim_context_create_from_file(const char* path, psim_context** out);
PSIM_API void psim_context_destroy(psim_context* ctx);

/* Overrides: {"seed", "strategy", "pipeline", "parallel", "output_dir",
 * "personas_path", "endpoint", "strict_replay"}, all optional. */
PSIM_API psim_status psim_context_apply_overrides(psim_context* ctx, const char* overrides_json);

/* The resolved configuration as JSON. */
PSIM_API psim_status psim_context_config(const psim_context* ctx, char** out_json);

/* Writes the personas file. Summary: {"path", "count", "per_condition"}. */
PSIM_API psim_status psim_generate_personas(psim_context* ctx, char** out_summary_json);

/* Runs every conversation into the output directory. Summary: {"dir",
 * "requested", "transcripts", "aborted"}. Returns PSIM_ERR_ABORT_THRESHOLD,
 * with outputs written, when the aborted share exceeds the configured
 * threshold. */
PSIM_API psim_status psim_simulate(psim_context* ctx, char** out_summary_json);

/* Analyzes one run, or compares two (without strategy first). options_json
 * may be NULL: {"group_by", "chitchat_breaks_runs", "guided_averaging",
 * "chart_scale", "t_variant"}. out_dir may be NULL. */
PSIM_API psim_status psim_analyze(const char* const* run_dirs, size_t n_dirs, const char* options_json,
                                  const char* out_dir, char** out_summary_json);

/* Thought grammar. catalog_json may be NULL for the default catalog. The
 * parsed form is {"kind": ..., "intent": ...}. */
PSIM_API psim_status psim_parse_thought(const char* raw, const char* catalog_json, char** out_json);
PSIM_API psim_status psim_format_thought(const char* thought_json, char** out_text);

/* Statistics. A degenerate test sets the statistic it can, sets p to NaN
 * and returns PSIM_ERR_DEGENERATE. */
PSIM_API psim_status psim_reg_incomplete_beta(double a, double b, double x, double* out);
PSIM_API psim_status psim_one_way_anova(const double* values, const size_t* group_sizes, size_t n_groups,
                                        double* out_f, double* out_p, double* out_df1, double* out_df2);
PSIM_API psim_status psim_t_test(const double* a, size_t na, const double* b, size_t nb, int welch,
                                 double* out_t, double* out_p, double* out_df);

#ifdef __cplusplus
}
#endif

#endif /* PSIM_PSIM_H */
