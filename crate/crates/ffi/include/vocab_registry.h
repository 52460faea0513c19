#ifndef VOCAB_REGISTRY_H
#define VOCAB_REGISTRY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VrStatus {
  VR_STATUS_OK = 0,
  VR_STATUS_NULL_ARGUMENT = 1,
  VR_STATUS_INVALID_UTF8 = 2,
  VR_STATUS_NOT_FOUND = 3,
  VR_STATUS_CONFLICT = 4,
  VR_STATUS_INVALID_INPUT = 5,
  VR_STATUS_VALIDATION_FAILED = 6,
  VR_STATUS_PARSE_FAILED = 7,
  VR_STATUS_FORBIDDEN = 8,
  VR_STATUS_LOCKED = 9,
  VR_STATUS_IO = 10,
  VR_STATUS_CORRUPT = 11,
  VR_STATUS_INTERNAL = 12,
} VrStatus;

typedef enum VrFormat {
  VR_FORMAT_TRIPLES = 0,
  VR_FORMAT_CSV = 1,
  VR_FORMAT_STRUCTURED = 2,
} VrFormat;

// Opaque registry handle. Holds the data directory lock until freed.
typedef struct VrRegistry VrRegistry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Opens the registry stored in `data_dir`, creating it if needed.
// `base_uri` may be null to keep the default minting base.
//
// # Safety
// String arguments must be null or NUL-terminated; `out` must be writable.
enum VrStatus vr_registry_open(const char *data_dir, const char *base_uri, struct VrRegistry **out);

// Closes a handle and releases the data directory. Null is ignored.
//
// # Safety
// `reg` must come from `vr_registry_open` and not be used afterwards.
void vr_registry_free(struct VrRegistry *reg);

// Registers an organization agent with one email contact. Writes the new
// agent id and its API token, both to be freed with `vr_string_free`.
//
// # Safety
// Pointers must be valid as described for `vr_registry_open`.
enum VrStatus vr_register_agent(const struct VrRegistry *reg,
                                const char *name,
                                const char *email,
                                char **out_agent_id,
                                char **out_api_token);

// Imports `len` bytes of `payload` as a new hosted scheme named `token`,
// owned by `owner`. Writes the head version of the new scheme.
//
// # Safety
// `payload` must point to `len` readable bytes.
enum VrStatus vr_import(const struct VrRegistry *reg,
                        const char *owner,
                        const char *token,
                        enum VrFormat format,
                        const uint8_t *payload,
                        size_t len,
                        uint64_t *out_version);

// Exports a scheme at `version`, or at its head when `version` is 0.
// Writes the document and the version it reflects.
//
// # Safety
// Pointers must be valid as described for `vr_registry_open`.
enum VrStatus vr_export(const struct VrRegistry *reg,
                        const char *token,
                        uint64_t version,
                        enum VrFormat format,
                        char **out_text,
                        uint64_t *out_version);

// Writes the head version of a hosted scheme.
//
// # Safety
// Pointers must be valid as described for `vr_registry_open`.
enum VrStatus vr_head_version(const struct VrRegistry *reg,
                              const char *token,
                              uint64_t *out_version);

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next library call on the same thread.
const char *vr_last_error(void);

// Frees a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void vr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOCAB_REGISTRY_H */
