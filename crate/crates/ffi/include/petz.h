#ifndef PETZ_H
#define PETZ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PetzFamily {
  PETZ_FAMILY_AMPLITUDE_DAMPING = 0,
  PETZ_FAMILY_PHASE_DAMPING = 1,
} PetzFamily;

typedef enum PetzStatus {
  PETZ_STATUS_OK = 0,
  PETZ_STATUS_NULL_POINTER = 1,
  PETZ_STATUS_INVALID_ARGUMENT = 2,
  PETZ_STATUS_INVALID_STATE = 3,
  PETZ_STATUS_DIMENSION_MISMATCH = 4,
  PETZ_STATUS_NOT_TRACE_PRESERVING = 5,
  PETZ_STATUS_UNSUPPORTED = 6,
  PETZ_STATUS_JSON = 7,
  PETZ_STATUS_IO = 8,
  PETZ_STATUS_PANIC = 9,
} PetzStatus;

/**
 * Opaque handle to a quantum channel.
 */
typedef struct PetzChannel PetzChannel;

/**
 * Opaque handle to a density matrix.
 */
typedef struct PetzState PetzState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *petz_last_error(void);

/**
 * Amplitude-damping channel with decay probability `p`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PetzStatus petz_channel_amplitude_damping(double p, struct PetzChannel **out);

/**
 * Phase-damping channel with strength `p`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PetzStatus petz_channel_phase_damping(double p, struct PetzChannel **out);

/**
 * Closed-form recovery map for `family` (a [`PetzFamily`] value) at strength `p` and reference weight `eps`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PetzStatus petz_channel_recovery(int32_t family,
                                      double p,
                                      double eps,
                                      struct PetzChannel **out);

/**
 * Recovery map built from the general construction rather than the closed form.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum PetzStatus petz_channel_recovery_general(int32_t family,
                                              double p,
                                              double eps,
                                              struct PetzChannel **out);

/**
 * `outer ∘ inner`.
 *
 * # Safety
 * `outer` and `inner` must be live channel handles; `out` must be writable.
 */
enum PetzStatus petz_channel_compose(const struct PetzChannel *outer,
                                     const struct PetzChannel *inner,
                                     struct PetzChannel **out);

/**
 * Number of Kraus operators and the input/output dimensions.
 *
 * # Safety
 * `channel` must be a live handle; the out pointers must be writable.
 */
enum PetzStatus petz_channel_shape(const struct PetzChannel *channel,
                                   size_t *kraus_count,
                                   size_t *dim_in,
                                   size_t *dim_out);

/**
 * ‖Σ K†K − 1‖_F for the channel.
 *
 * # Safety
 * `channel` must be a live handle; `out` must be writable.
 */
enum PetzStatus petz_channel_tp_residual(const struct PetzChannel *channel, double *out);

/**
 * Applies `channel` to `state`.
 *
 * # Safety
 * `channel` and `state` must be live handles; `out` must be writable.
 */
enum PetzStatus petz_channel_apply(const struct PetzChannel *channel,
                                   const struct PetzState *state,
                                   struct PetzState **out);

/**
 * Compiles `channel` to a dilated quantum circuit and reports the Choi
 * distance between the simulated circuit and the channel.
 *
 * # Safety
 * `channel` must be a live handle; `distance` must be writable.
 */
enum PetzStatus petz_channel_dqc_distance(const struct PetzChannel *channel, double *distance);

/**
 * Parses a channel from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PetzStatus petz_channel_from_json(const char *json, struct PetzChannel **out);

/**
 * JSON form of a channel; release the string with [`petz_string_free`].
 *
 * # Safety
 * `channel` must be a live handle; `out` must be writable.
 */
enum PetzStatus petz_channel_to_json(const struct PetzChannel *channel, char **out);

/**
 * # Safety
 * `channel` must come from this library and not be freed twice. Null is ignored.
 */
void petz_channel_free(struct PetzChannel *channel);

/**
 * Density matrix from row-major real and imaginary parts of a `dim`×`dim` matrix.
 *
 * # Safety
 * `re` and `im` must each point to `dim * dim` doubles; `out` must be writable.
 */
enum PetzStatus petz_state_new(size_t dim,
                               const double *re,
                               const double *im,
                               struct PetzState **out);

/**
 * Pure state |ψ⟩⟨ψ| from `dim` amplitudes.
 *
 * # Safety
 * `re` and `im` must each point to `dim` doubles; `out` must be writable.
 */
enum PetzStatus petz_state_pure(size_t dim,
                                const double *re,
                                const double *im,
                                struct PetzState **out);

/**
 * Dimension of a state.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum PetzStatus petz_state_dim(const struct PetzState *state, size_t *out);

/**
 * Entry (`row`, `col`) of a state.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` must be writable.
 */
enum PetzStatus petz_state_entry(const struct PetzState *state,
                                 size_t row,
                                 size_t col,
                                 double *re,
                                 double *im);

/**
 * Uhlmann fidelity (squared convention) between two states.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum PetzStatus petz_fidelity(const struct PetzState *a, const struct PetzState *b, double *out);

/**
 * # Safety
 * `state` must come from this library and not be freed twice. Null is ignored.
 */
void petz_state_free(struct PetzState *state);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void petz_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PETZ_H */
