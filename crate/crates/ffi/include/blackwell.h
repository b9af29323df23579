#ifndef BLACKWELL_H
#define BLACKWELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum BwStatus {
  BwStatus_Ok = 0,
  BwStatus_NullPointer = 1,
  BwStatus_Utf8Error = 2,
  BwStatus_ParseError = 3,
  BwStatus_DomainError = 4,
  BwStatus_BufferTooSmall = 5,
  BwStatus_UnknownName = 6,
  BwStatus_Panic = 7,
} BwStatus;

/**
 * Opaque game handle.
 */
typedef struct BwGame BwGame;

/**
 * Opaque strategy handle, bound to the alphabets it was parsed with.
 */
typedef struct BwStrategy BwStrategy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *bw_version(void);

/**
 * Message of the last failure on this thread, or NULL. Borrowed pointer:
 * valid until the next failing call; do not free.
 */
const char *bw_last_error_message(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a `bw_*` call that hands
 * ownership to the caller, and must not be used afterwards.
 */
void bw_string_free(char *s);

/**
 * Parse a game document.
 *
 * # Safety
 * `text` must be NUL-terminated; `out_game` must be a valid pointer.
 */
enum BwStatus bw_game_parse(const char *text, struct BwGame **out_game);

/**
 * Build one of the built-in example games (`sps`, `stopgame`,
 * `inf-ones`, `fin-ones`).
 *
 * # Safety
 * `name` must be NUL-terminated; `out_game` must be a valid pointer.
 */
enum BwStatus bw_game_example(const char *name, struct BwGame **out_game);

/**
 * Release a game handle.
 *
 * # Safety
 * `game` must come from `bw_game_parse`/`bw_game_example` and must not
 * be used afterwards.
 */
void bw_game_free(struct BwGame *game);

/**
 * Kind of the game: 0 matrix, 1 finite, 2 generalized-open, 3 open-set,
 * 4 gdelta, 5 union; -1 for a null handle.
 *
 * # Safety
 * `game` must be a live handle or NULL.
 */
int bw_game_kind(const struct BwGame *game);

/**
 * Number of moves the given player chooses from.
 *
 * # Safety
 * `game` must be a live handle; `out_len` must be valid.
 */
enum BwStatus bw_game_moves_len(const struct BwGame *game, int player, uintptr_t *out_len);

/**
 * Canonical document of the game; free with `bw_string_free`.
 *
 * # Safety
 * `game` must be a live handle; `out_text` must be valid.
 */
enum BwStatus bw_game_serialize(const struct BwGame *game, char **out_text);

/**
 * Parse a strategy document against the game's alphabets.
 *
 * # Safety
 * Pointers must be valid as in `bw_game_parse`.
 */
enum BwStatus bw_strategy_parse(const struct BwGame *game,
                                const char *text,
                                struct BwStrategy **out_strategy);

/**
 * The uniform strategy for a player.
 *
 * # Safety
 * `out_strategy` must be valid.
 */
enum BwStatus bw_strategy_uniform(int player, struct BwStrategy **out_strategy);

/**
 * Release a strategy handle.
 *
 * # Safety
 * `strategy` must come from a `bw_strategy_*` call and must not be used
 * afterwards.
 */
void bw_strategy_free(struct BwStrategy *strategy);

/**
 * Solve a matrix or finite game; writes the value.
 *
 * # Safety
 * `game` must be a live handle; `out_value` must be valid.
 */
enum BwStatus bw_solve(const struct BwGame *game, double *out_value);

/**
 * Solve and return one player's optimal strategy as a canonical
 * document; free with `bw_string_free`.
 *
 * # Safety
 * `game` must be a live handle; out pointers must be valid.
 */
enum BwStatus bw_solve_strategy(const struct BwGame *game,
                                int player,
                                double *out_value,
                                char **out_doc);

/**
 * Per-depth value bounds. `out_lower` and `out_upper` must hold
 * `depth + 1` entries each; `k_max` only matters for recurrence
 * objectives.
 *
 * # Safety
 * `game` must be a live handle; the output buffers must hold `len`
 * writable doubles.
 */
enum BwStatus bw_bracket(const struct BwGame *game,
                         uintptr_t depth,
                         uintptr_t k_max,
                         double tol,
                         double *out_lower,
                         double *out_upper,
                         uintptr_t len);

/**
 * Expected payoff of a strategy pair; sup-payoff games use the depth
 * truncation.
 *
 * # Safety
 * Handles must be live; `out_value` must be valid.
 */
enum BwStatus bw_expected_payoff(const struct BwGame *game,
                                 const struct BwStrategy *sigma,
                                 const struct BwStrategy *tau,
                                 uintptr_t depth,
                                 double *out_value);

/**
 * Value of the best pure counterstrategy against `fixed`, and the
 * response as a canonical document (optional: pass NULL to skip).
 *
 * # Safety
 * Handles must be live; `out_value` must be valid; `out_doc` may be
 * NULL.
 */
enum BwStatus bw_best_response(const struct BwGame *game,
                               const struct BwStrategy *fixed,
                               uintptr_t depth,
                               double *out_value,
                               char **out_doc);

/**
 * Seeded Monte Carlo estimate; writes the sample mean and its standard
 * error.
 *
 * # Safety
 * Handles must be live; out pointers must be valid.
 */
enum BwStatus bw_simulate(const struct BwGame *game,
                          const struct BwStrategy *sigma,
                          const struct BwStrategy *tau,
                          uintptr_t rollouts,
                          uintptr_t depth,
                          uint64_t seed,
                          double *out_mean,
                          double *out_std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLACKWELL_H */
