#ifndef AUTOSEQ_H
#define AUTOSEQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum AutoseqStatus {
  AUTOSEQ_STATUS_OK = 0,
  AUTOSEQ_STATUS_INVALID_ARGUMENT = 1,
  AUTOSEQ_STATUS_RESOURCE_LIMIT = 2,
  AUTOSEQ_STATUS_DOMAIN = 3,
  AUTOSEQ_STATUS_PARSE = 4,
  AUTOSEQ_STATUS_IO = 5,
  AUTOSEQ_STATUS_NULL_POINTER = 6,
  AUTOSEQ_STATUS_PANIC = 7,
} AutoseqStatus;

// Opaque automaton handle.
typedef struct AutoseqDfa AutoseqDfa;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *autoseq_last_error(void);

// Library version as a static NUL-terminated string.
const char *autoseq_version(void);

// Builds a builtin automaton: `thue-morse`, `mod:M:K`, `cerny:N`, `const:A:K`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum AutoseqStatus autoseq_dfa_builtin(const char *name, struct AutoseqDfa **out);

// Parses an automaton in the text format. With `repair_leading_zeros` the
// initial state's 0-transition is redirected to itself instead of rejected.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum AutoseqStatus autoseq_dfa_parse(const char *text,
                                     bool repair_leading_zeros,
                                     struct AutoseqDfa **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `dfa` must come from this library and not be used afterwards.
void autoseq_dfa_free(struct AutoseqDfa *dfa);

// # Safety
// `dfa` must be a live handle; `base` and `states` writable pointers.
enum AutoseqStatus autoseq_dfa_info(const struct AutoseqDfa *dfa, uint32_t *base, size_t *states);

// `a(n)`, the output after reading the base-`k` digits of `n`.
//
// # Safety
// `dfa` must be a live handle and `out` writable.
enum AutoseqStatus autoseq_dfa_eval(const struct AutoseqDfa *dfa, uint64_t n, uint32_t *out);

// Synchronization of the minimal automaton. `reset_len` receives the
// length of the reset word found, or -1 when there is none.
//
// # Safety
// `dfa` must be a live handle; the out pointers writable.
enum AutoseqStatus autoseq_dfa_sync(const struct AutoseqDfa *dfa,
                                    bool *synchronizing,
                                    int64_t *reset_len);

// `⌊n^{p/q}⌋`; fails with `ResourceLimit` if it does not fit in 64 bits.
//
// # Safety
// `out` must be writable.
enum AutoseqStatus autoseq_ps_floor(uint64_t n, uint32_t p, uint32_t q, uint64_t *out);

// `a(⌊n^{p/q}⌋)`.
//
// # Safety
// `dfa` must be a live handle and `out` writable.
enum AutoseqStatus autoseq_ps_letter(const struct AutoseqDfa *dfa,
                                     uint32_t p,
                                     uint32_t q,
                                     uint64_t n,
                                     uint32_t *out);

// Letter counts of `a(⌊n^{p/q}⌋)` over `n = 1..=N`. `counts[a]` receives the
// count of letter `a`; every letter must be below `counts_len`.
//
// # Safety
// `dfa` must be a live handle and `counts` point to `counts_len` writable values.
enum AutoseqStatus autoseq_letter_counts(const struct AutoseqDfa *dfa,
                                         uint32_t p,
                                         uint32_t q,
                                         uint64_t n,
                                         size_t workers,
                                         uint64_t *counts,
                                         size_t counts_len);

// Subword counts `N_1..N_{h_max}` of `a(⌊n^{p/q}⌋)` over windows starting
// at `start..start+N`, written to `out[0..h_max]`.
//
// # Safety
// `dfa` must be a live handle and `out` point to `h_max` writable values.
enum AutoseqStatus autoseq_subword_counts(const struct AutoseqDfa *dfa,
                                          uint32_t p,
                                          uint32_t q,
                                          uint64_t start,
                                          uint64_t n,
                                          size_t h_max,
                                          uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUTOSEQ_H */
