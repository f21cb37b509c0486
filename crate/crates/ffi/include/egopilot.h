#ifndef EGOPILOT_H
#define EGOPILOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EgoStatus {
  EGO_STATUS_OK = 0,
  EGO_STATUS_NULL_POINTER = 1,
  EGO_STATUS_INVALID_UTF8 = 2,
  EGO_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The input ends mid-frame; nothing was consumed.
   */
  EGO_STATUS_NEED_MORE = 4,
  EGO_STATUS_UNKNOWN_FRAME_TYPE = 5,
  EGO_STATUS_OVERSIZE_FRAME = 6,
  EGO_STATUS_INVALID_FEN = 7,
  EGO_STATUS_INVALID_POSITION = 8,
  EGO_STATUS_NO_LEGAL_MOVES = 9,
  EGO_STATUS_BUFFER_TOO_SMALL = 10,
  EGO_STATUS_NOT_FOUND = 11,
  EGO_STATUS_PANIC = 99,
} EgoStatus;

/**
 * Voice activity detector state for one audio stream.
 */
typedef struct EgoVad EgoVad;

/**
 * Temporal vote over the last `n` observed boards.
 */
typedef struct EgoVoteBuffer EgoVoteBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ego_last_error_message(void);

/**
 * Static, NUL-terminated.
 */
const char *ego_version(void);

/**
 * Releases a buffer returned by this library. Null is ignored.
 *
 * # Safety
 * `p` and `len` must come from one library call and be freed once.
 */
void ego_bytes_free(uint8_t *p, size_t len);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and be freed once.
 */
void ego_string_free(char *s);

/**
 * Encodes one frame. The result is freed with [`ego_bytes_free`].
 *
 * # Safety
 * `payload` must be readable for `len` bytes; outputs must be writable.
 */
enum EgoStatus ego_frame_encode(uint8_t frame_type,
                                const uint8_t *payload,
                                size_t len,
                                uint8_t **out,
                                size_t *out_len);

/**
 * Decodes the frame at the front of `buf`. On [`EgoStatus::NeedMore`],
 * `*consumed` is 0 and `*needed` holds the minimum number of extra bytes.
 * The payload is freed with [`ego_bytes_free`].
 *
 * # Safety
 * `buf` must be readable for `len` bytes; outputs must be writable.
 */
enum EgoStatus ego_frame_decode(const uint8_t *buf,
                                size_t len,
                                uint8_t *out_type,
                                uint8_t **out_payload,
                                size_t *out_payload_len,
                                size_t *consumed,
                                size_t *needed);

/**
 * Creates a detector. `config_json` may be null for defaults, or a JSON
 * object overriding any of: sample_rate, chunk_samples, gain, theta_start,
 * theta_barge_in, t_silence_ms, t_min_ms, preroll_ms. Null on error.
 *
 * # Safety
 * `config_json` is null or a NUL-terminated string.
 */
struct EgoVad *ego_vad_new(const char *config_json);

/**
 * Feeds one chunk. `*halt` reports a barge-in; `*dispatched` reports a
 * finished utterance, readable through [`ego_vad_segment`].
 *
 * # Safety
 * `vad` comes from [`ego_vad_new`]; `samples` is readable for `n` values.
 */
enum EgoStatus ego_vad_process(struct EgoVad *vad,
                               const int16_t *samples,
                               size_t n,
                               bool playing,
                               bool *halt,
                               bool *dispatched);

/**
 * The most recently dispatched segment, borrowed until the next call on
 * this handle.
 *
 * # Safety
 * `vad` comes from [`ego_vad_new`]; outputs are writable.
 */
enum EgoStatus ego_vad_segment(const struct EgoVad *vad, const int16_t **out, size_t *out_len);

/**
 * # Safety
 * `vad` comes from [`ego_vad_new`] and is freed once. Null is ignored.
 */
void ego_vad_free(struct EgoVad *vad);

/**
 * Best move in coordinate notation (e.g. `e2e4`, `e7e8q`) written
 * NUL-terminated into `out` of `cap` bytes; score in centipawns from the
 * mover's side.
 *
 * # Safety
 * `fen` is NUL-terminated; `out` is writable for `cap` bytes.
 */
enum EgoStatus ego_best_move(const char *fen,
                             uint32_t depth,
                             char *out,
                             size_t cap,
                             int32_t *score_cp);

/**
 * # Safety
 * `fen` is NUL-terminated; `out` is writable.
 */
enum EgoStatus ego_legal_move_count(const char *fen, uint32_t *out);

/**
 * # Safety
 * `fen` is NUL-terminated; `out` is writable.
 */
enum EgoStatus ego_perft(const char *fen, uint32_t depth, uint64_t *out);

/**
 * Canonical FEN of `fen`, freed with [`ego_string_free`]. Null on error.
 *
 * # Safety
 * `fen` is NUL-terminated.
 */
char *ego_fen_normalize(const char *fen);

/**
 * Creates a vote buffer whose committed board starts empty. Null on a
 * zero size or a threshold outside (0, 1].
 */
struct EgoVoteBuffer *ego_vote_new(size_t n, double tau);

/**
 * Pushes one grid of 64 class indices (a1 first; 0 empty, 1-6 white
 * P N B R Q K, 7-12 black). Writes the committed labels and, per square,
 * 1 where this push decided the label.
 *
 * # Safety
 * `labels` is readable for 64 bytes; outputs are writable for 64 bytes.
 */
enum EgoStatus ego_vote_push(struct EgoVoteBuffer *buf,
                             const uint8_t *labels,
                             uint8_t *out_labels,
                             uint8_t *out_fresh);

/**
 * # Safety
 * `buf` comes from [`ego_vote_new`] and is freed once. Null is ignored.
 */
void ego_vote_free(struct EgoVoteBuffer *buf);

/**
 * Answer letter found in a model completion, or [`EgoStatus::NotFound`].
 *
 * # Safety
 * `completion` is NUL-terminated; `out` is writable.
 */
enum EgoStatus ego_extract_choice(const char *completion, size_t num_options, char *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EGOPILOT_H */
