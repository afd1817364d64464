#ifndef POLAR_AED_H
#define POLAR_AED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum PaStatus {
  PA_STATUS_OK = 0,
  PA_STATUS_NULL_POINTER = 1,
  PA_STATUS_INVALID_ARGUMENT = 2,
  PA_STATUS_LENGTH_MISMATCH = 3,
  PA_STATUS_IO = 4,
  PA_STATUS_PARSE = 5,
  PA_STATUS_PANIC = 6,
} PaStatus;

/*
 Polar code handle.
 */
typedef struct PaCode PaCode;

/*
 Ensemble decoder handle; not safe for concurrent use.
 */
typedef struct PaDecoder PaDecoder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length excluding the NUL,
 or 0 if there is none.

 # Safety
 `buf` must be valid for `len` bytes or null.
 */
uintptr_t pa_last_error(char *buf, uintptr_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *pa_version(void);

/*
 Code from partial-order generators. `profile` may be null with
 `profile_len` 0 for the trivial profile.

 # Safety
 Pointers must be valid for their lengths; `out` must be writable.
 */
enum PaStatus pa_code_from_generators(uintptr_t n,
                                      const uintptr_t *generators,
                                      uintptr_t generators_len,
                                      const uintptr_t *profile,
                                      uintptr_t profile_len,
                                      struct PaCode **out);

/*
 The (1024, 78) code with generators {255, 505} and profile [3, 7].

 # Safety
 `out` must be writable.
 */
enum PaStatus pa_code_puf_1024(struct PaCode **out);

/*
 Loads a code spec file.

 # Safety
 `file` must be a NUL-terminated string; `out` must be writable.
 */
enum PaStatus pa_code_load(const char *file, struct PaCode **out);

/*
 # Safety
 `code` must come from a `pa_code_*` constructor and not be used afterwards.
 */
void pa_code_free(struct PaCode *code);

/*
 Block length N, or 0 for a null handle.

 # Safety
 `code` must be a live handle or null.
 */
uintptr_t pa_code_length(const struct PaCode *code);

/*
 Dimension K, or 0 for a null handle.

 # Safety
 `code` must be a live handle or null.
 */
uintptr_t pa_code_dimension(const struct PaCode *code);

/*
 Encodes `K` message bits (one per byte) into `N` codeword bits.

 # Safety
 `message` must hold `message_len` bytes and `codeword` `codeword_len`.
 */
enum PaStatus pa_code_encode(const struct PaCode *code,
                             const uint8_t *message,
                             uintptr_t message_len,
                             uint8_t *codeword,
                             uintptr_t codeword_len);

/*
 Extracts the `K` information bits of a codeword.

 # Safety
 Buffers must be valid for their lengths.
 */
enum PaStatus pa_code_extract(const struct PaCode *code,
                              const uint8_t *codeword,
                              uintptr_t codeword_len,
                              uint8_t *message,
                              uintptr_t message_len);

/*
 Decoder for binary channel inputs. `ensemble_file` may be null for plain
 SC decoding; `q_max` 0 means unbounded precision.

 # Safety
 `code` must be live; `ensemble_file` null or NUL-terminated; `out` writable.
 */
enum PaStatus pa_decoder_new(const struct PaCode *code,
                             const char *ensemble_file,
                             uint32_t q_max,
                             struct PaDecoder **out);

/*
 Decoder with a randomly sampled ensemble. `architecture`: 0 independent,
 1 cascaded, 2 recursive.

 # Safety
 `code` must be live; `out` writable.
 */
enum PaStatus pa_decoder_new_sampled(const struct PaCode *code,
                                     uint32_t architecture,
                                     uintptr_t size,
                                     uint64_t seed,
                                     uint32_t q_max,
                                     struct PaDecoder **out);

/*
 # Safety
 `decoder` must come from a `pa_decoder_*` constructor and not be used
 afterwards.
 */
void pa_decoder_free(struct PaDecoder *decoder);

/*
 Ensemble size M, or 0 for a null handle.

 # Safety
 `decoder` must be live or null.
 */
uintptr_t pa_decoder_ensemble_size(const struct PaDecoder *decoder);

/*
 Decodes `N` integer LLRs (positive favours bit 0) into a codeword.
 `winner` may be null.

 # Safety
 Buffers must be valid for their lengths; `decoder` must be live.
 */
enum PaStatus pa_decoder_decode(struct PaDecoder *decoder,
                                const int32_t *llr,
                                uintptr_t llr_len,
                                uint8_t *codeword,
                                uintptr_t codeword_len,
                                uintptr_t *winner);

/*
 Decodes a received hard-decision word (one bit per byte).

 # Safety
 Buffers must be valid for their lengths; `decoder` must be live.
 */
enum PaStatus pa_decoder_decode_hard(struct PaDecoder *decoder,
                                     const uint8_t *received,
                                     uintptr_t received_len,
                                     uint8_t *codeword,
                                     uintptr_t codeword_len,
                                     uintptr_t *winner);

/*
 Analytic BLER of BCH(1023, 318) with `repetition`-fold inner code.

 # Safety
 `out` must be writable.
 */
enum PaStatus pa_bch_concat_bler(double epsilon, uintptr_t repetition, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLAR_AED_H */
