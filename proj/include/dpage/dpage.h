#ifndef DPAGE_DPAGE_H_
#define DPAGE_DPAGE_H_

/* C interface to the dialog-page engine.
 *
 * Handles are opaque. Every fallible call returns a dpage_status; on failure
 * dpage_last_error_message() describes the problem for the calling thread.
 * Strings and buffers returned through out-parameters are heap-allocated and
 * must be released with dpage_free(). Structured results are UTF-8 JSON.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(DPAGE_BUILDING_LIBRARY)
#define DPAGE_API __attribute__((visibility("default")))
#else
#define DPAGE_API
#endif

typedef enum dpage_status {
  DPAGE_OK = 0,
  DPAGE_E_PARSE = 1,
  DPAGE_E_VALIDATION = 2,
  DPAGE_E_NOT_FOUND = 3,
  DPAGE_E_INVALID_ARGUMENT = 4,
  DPAGE_E_ILLEGAL_OPERATION = 5,
  DPAGE_E_CONTEXT_MISMATCH = 6,
  DPAGE_E_IO = 7,
  DPAGE_E_CORRUPT_STATE = 8,
  DPAGE_E_LLM = 9,
  DPAGE_E_RUNNER = 10,
  DPAGE_E_BUSY = 11,
  DPAGE_E_STATE_MISMATCH = 12,
  DPAGE_E_INTERNAL = 99
} dpage_status;

typedef struct dpage_page dpage_page;
typedef struct dpage_service dpage_service;

DPAGE_API const char *dpage_version(void);
DPAGE_API const char *dpage_status_name(dpage_status status);

/* Message of the last failure on this thread ("" after a success). */
DPAGE_API const char *dpage_last_error_message(void);
/* JSON detail of the last failure, e.g. the validation report; "null" if none. */
DPAGE_API const char *dpage_last_error_detail(void);

DPAGE_API void dpage_free(void *ptr);

/* ---- pages ---------------------------------------------------------- */

/* Parse and validate a .dpage document. Validation failures return
 * DPAGE_E_VALIDATION with the report in dpage_last_error_detail(). */
DPAGE_API dpage_status dpage_page_load(const char *data, size_t len, dpage_page **out);
DPAGE_API dpage_status dpage_page_load_file(const char *path, dpage_page **out);

/* Parse and validate without rejecting: *report_json receives
 * {"errors":[...],"warnings":[...]}, *error_count the number of errors.
 * Only unreadable or malformed documents fail. */
DPAGE_API dpage_status dpage_validate_file(const char *path, char **report_json, size_t *error_count);

/* Skeleton page with an instructor and a reader persona. */
DPAGE_API dpage_status dpage_page_new(const char *title, dpage_page **out);

/* Canonical serialization (deterministic). */
DPAGE_API dpage_status dpage_page_save(const dpage_page *page, char **out, size_t *len);
DPAGE_API dpage_status dpage_page_save_file(const dpage_page *page, const char *path);

/* {"id","title","rootId","targetId","targetPath":[...],"cellCount"} */
DPAGE_API dpage_status dpage_page_info(const dpage_page *page, char **out_json);

/* The cell in its .dpage JSON form. */
DPAGE_API dpage_status dpage_page_cell(const dpage_page *page, const char *cell_id, char **out_json);

/* Generates `turns` unverified draft cells chained under parent_id (NULL: the
 * root) using the "llm" section of config_json. *new_ids_json lists the new
 * cell ids. The input page is not modified. */
DPAGE_API dpage_status dpage_page_generate(const dpage_page *page, const char *parent_id, const char *topic,
                                           int turns, const char *config_json, dpage_page **out,
                                           char **new_ids_json);

/* Writes index.html (target path only) and media/ into out_dir. */
DPAGE_API dpage_status dpage_page_export_html(const dpage_page *page, const char *out_dir);

DPAGE_API void dpage_page_free(dpage_page *page);

/* ---- reader service ------------------------------------------------- */

/* config_json may be NULL. See README for keys. The page is copied. */
DPAGE_API dpage_status dpage_service_create(const dpage_page *page, const char *config_json,
                                            dpage_service **out);
DPAGE_API void dpage_service_free(dpage_service *service);

/* All *out_json results are JSON documents described in README. */
DPAGE_API dpage_status dpage_session_create(dpage_service *service, const char *page_id, char **out_json);
DPAGE_API dpage_status dpage_session_thread(dpage_service *service, const char *session_id, char **out_json);
DPAGE_API dpage_status dpage_session_responses(dpage_service *service, const char *session_id,
                                               char **out_json);
DPAGE_API dpage_status dpage_session_status(dpage_service *service, const char *session_id, char **out_json);
DPAGE_API dpage_status dpage_session_state(dpage_service *service, const char *session_id, char **out_json);
DPAGE_API dpage_status dpage_session_select(dpage_service *service, const char *session_id,
                                            const char *cell_id, char **out_json);
DPAGE_API dpage_status dpage_session_jump(dpage_service *service, const char *session_id, const char *cell_id,
                                          char **out_json);
DPAGE_API dpage_status dpage_session_ask(dpage_service *service, const char *session_id, const char *question,
                                         char **out_json);
DPAGE_API dpage_status dpage_session_code(dpage_service *service, const char *session_id, const char *cell_id,
                                          char **out_json);
DPAGE_API dpage_status dpage_session_answer(dpage_service *service, const char *session_id,
                                            const char *directive_id, const char *payload_json,
                                            char **out_json);
DPAGE_API dpage_status dpage_session_run(dpage_service *service, const char *session_id,
                                         const char *directive_id, const char *code, char **out_json);
/* *was_running is set to 1 when a run was interrupted. */
DPAGE_API dpage_status dpage_session_cancel_run(dpage_service *service, const char *session_id,
                                                int *was_running);

DPAGE_API dpage_status dpage_service_media(dpage_service *service, const char *page_id, const char *filename,
                                           unsigned char **data, size_t *len);

#ifdef __cplusplus
}
#endif

#endif /* DPAGE_DPAGE_H_ */
