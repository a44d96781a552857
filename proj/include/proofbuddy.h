#ifndef PROOFBUDDY_H
#define PROOFBUDDY_H

/* C interface to the proofbuddy core.
 *
 * Conventions:
 *  - Every fallible call returns a pb_status. On failure a message for the
 *    calling thread is available from pb_last_error() until the next call.
 *  - Text is UTF-8 with an explicit byte length; lengths never include a
 *    terminator.
 *  - Strings returned through `char**` are NUL-terminated, owned by the
 *    caller and released with pb_string_free().
 *  - Structured results are JSON documents; docs/ describes their shapes.
 *  - Handles are opaque and released with their matching *_free call, which
 *    accepts NULL.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(PB_BUILDING_LIBRARY)
#define PB_API __attribute__((visibility("default")))
#else
#define PB_API
#endif

typedef enum pb_status {
  PB_OK = 0,
  PB_INVALID_ARGUMENT = 1,
  PB_FORMAT_ERROR = 2,
  PB_INVARIANT_VIOLATION = 3,
  PB_MISMATCH = 4,
  PB_OUT_OF_RANGE = 5,
  PB_NOT_FOUND = 6,
  PB_UNKNOWN_USER = 7,
  PB_NO_HEALTHY_INSTANCE = 8,
  PB_POOL_EXHAUSTED = 9,
  PB_TIMEOUT = 10,
  PB_PROTOCOL_ERROR = 11,
  PB_UNAUTHENTICATED = 12,
  PB_FORBIDDEN = 13,
  PB_STORAGE_FAILURE = 14,
  PB_IO_ERROR = 15,
  PB_INTERNAL = 16
} pb_status;

PB_API const char* pb_version(void);
/* Stable kebab-case name, e.g. "pool-exhausted". */
PB_API const char* pb_status_name(pb_status status);
PB_API const char* pb_last_error(void);
PB_API void pb_string_free(char* text);

/* ---- isar-syntax ---------------------------------------------------- */

/* [{"kind","start","end","text"}] */
PB_API pb_status pb_tokenize(const char* text, size_t len, char** out_json);
/* {"commands":[{"name","start","end"}],"diagnostics":[...]} */
PB_API pb_status pb_outline(const char* text, size_t len, const char* locale, char** out_json);
/* Outline and restriction diagnostics under a bundled profile. */
PB_API pb_status pb_check_restrictions(const char* text, size_t len, const char* profile_id,
                                       const char* locale, char** out_json);
/* Bundled profile ids with their blocking flag. */
PB_API pb_status pb_profiles(char** out_json);
PB_API pb_status pb_symbols_lookup(const char* query, char** out_json);
/* Completions for the text before byte offset `cursor`. */
PB_API pb_status pb_complete(const char* text, size_t len, size_t cursor, const char* profile_id,
                             char** out_json);
/* Rules a profile allows; `category` may be NULL. */
PB_API pb_status pb_rules(const char* profile_id, const char* category, const char* locale,
                          char** out_json);

/* ---- tutorial-engine ------------------------------------------------ */

typedef struct pb_tutorial pb_tutorial;

PB_API pb_status pb_tutorial_load(const char* source, size_t len, pb_tutorial** out);
PB_API void pb_tutorial_free(pb_tutorial* tutorial);
/* {"id","title","profile","sections":[{"title","blocks":[{"id","kind"}]}]} */
PB_API pb_status pb_tutorial_info(const pb_tutorial* tutorial, char** out_json);
/* Authoring diagnostics; profile_id NULL uses the tutorial's profile. */
PB_API pb_status pb_tutorial_validate(const pb_tutorial* tutorial, const char* profile_id,
                                      const char* locale, char** out_json);
/* Full theory text. state_json NULL uses the initial contents; with
 * `with_preamble` the rule alias declarations are included as the server
 * does. */
PB_API pb_status pb_tutorial_assemble(const pb_tutorial* tutorial, const char* state_json,
                                      int with_preamble, char** out_text);
/* Maps [start, end) of an assembled theory back to a block:
 * {"hidden","block_id","start","end","multi_segment"}. */
PB_API pb_status pb_tutorial_map_span(const pb_tutorial* tutorial, const char* state_json,
                                      int with_preamble, size_t start, size_t end,
                                      char** out_json);

/* ---- prover-gateway ------------------------------------------------- */

/* "fnv1a64:<16 hex digits>" */
PB_API pb_status pb_theory_hash(const char* text, size_t len, char** out);
/* Result the mock prover gives offline. mode "structural" or "fixture". */
PB_API pb_status pb_mock_check(const char* mode, const char* fixtures_path, const char* theory,
                               size_t len, char** out_json);

typedef struct pb_mock_prover pb_mock_prover;

/* fail_after < 0 disables the chaos hook. port 0 picks a free port. */
PB_API pb_status pb_mock_prover_start(const char* mode, const char* fixtures_path,
                                      const char* host, uint16_t port, int64_t fail_after,
                                      pb_mock_prover** out);
PB_API uint16_t pb_mock_prover_port(const pb_mock_prover* prover);
PB_API void pb_mock_prover_free(pb_mock_prover* prover);

typedef struct pb_pool pb_pool;

/* config_json keys (all optional): initial, max, session_cap, mode
 * ("structural" | "fixture" | "external"), fixtures, endpoints,
 * check_timeout_ms. */
PB_API pb_status pb_pool_create(const char* config_json, pb_pool** out);
PB_API void pb_pool_free(pb_pool* pool);
/* Leases a session, checks, releases. Result JSON as in pb_mock_check. */
PB_API pb_status pb_pool_check(pb_pool* pool, const char* theory, size_t len, char** out_json);
PB_API pb_status pb_pool_scale(pb_pool* pool, int target);
PB_API pb_status pb_pool_status(const pb_pool* pool, char** out_json);
/* 2 * ceil(roster / students_per_pair) */
PB_API int pb_instances_for_roster(size_t roster, int students_per_pair);

/* ---- submission-store ----------------------------------------------- */

/* [{"retain":n},{"insert":"..."},{"delete":n}] */
PB_API pb_status pb_diff(const char* before, size_t before_len, const char* after,
                         size_t after_len, char** out_ops_json);
PB_API pb_status pb_apply_diff(const char* base, size_t len, const char* ops_json,
                               char** out_text);

typedef struct pb_store pb_store;

/* path NULL opens an in-memory store. */
PB_API pb_status pb_store_open(const char* path, pb_store** out);
PB_API void pb_store_free(pb_store* store);
/* filter_json: {"course","tutorial","from","to"}, all optional. */
PB_API pb_status pb_store_export(const pb_store* store, const char* filter_json,
                                 char** out_ndjson);

/* ---- api-service ---------------------------------------------------- */

typedef struct pb_server pb_server;

/* Configured from PB_* environment variables. */
PB_API pb_status pb_server_from_env(pb_server** out);
PB_API pb_status pb_server_start(pb_server* server);
PB_API uint16_t pb_server_port(const pb_server* server);
/* Blocks until pb_server_stop() is called from another thread. */
PB_API void pb_server_wait(pb_server* server);
PB_API void pb_server_stop(pb_server* server);
PB_API void pb_server_free(pb_server* server);

PB_API pb_status pb_generate_keypair(char** out_private_pem, char** out_public_pem);
/* RS256 token over the claims object. */
PB_API pb_status pb_sign_token(const char* claims_json, const char* private_pem,
                               char** out_token);

#ifdef __cplusplus
}
#endif

#endif /* PROOFBUDDY_H */
