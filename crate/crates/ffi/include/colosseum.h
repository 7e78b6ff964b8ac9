#ifndef COLOSSEUM_H
#define COLOSSEUM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ColosseumStatus {
  COLOSSEUM_STATUS_OK = 0,
  COLOSSEUM_STATUS_NULL_ARGUMENT = 1,
  COLOSSEUM_STATUS_INVALID_UTF8 = 2,
  COLOSSEUM_STATUS_INVALID_JSON = 3,
  COLOSSEUM_STATUS_INVALID_CONFIG = 4,
  COLOSSEUM_STATUS_ILLEGAL_ACTION = 5,
  COLOSSEUM_STATUS_TERMINAL = 6,
  COLOSSEUM_STATUS_NOT_TERMINAL = 7,
  COLOSSEUM_STATUS_UNKNOWN_PLAYER = 8,
  COLOSSEUM_STATUS_BUFFER_TOO_SMALL = 9,
  COLOSSEUM_STATUS_PANIC = 10,
} ColosseumStatus;

/**
 * A game in progress. Only ever used behind a pointer.
 */
typedef struct ColosseumGame ColosseumGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on this thread.
 */
const char *colosseum_last_error(void);

/**
 * Library version as a static string.
 */
const char *colosseum_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void colosseum_string_free(char *s);

/**
 * Starts a game from an environment config such as
 * `{"env":"kuhn","players":3,"seed":7}`. Unspecified environment
 * parameters take their defaults.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out` a valid
 * pointer to write the handle to.
 */
enum ColosseumStatus colosseum_game_new(const char *config_json, struct ColosseumGame **out);

/**
 * Restores a game saved with `colosseum_game_to_json`.
 *
 * # Safety
 * As for `colosseum_game_new`.
 */
enum ColosseumStatus colosseum_game_from_json(const char *state_json, struct ColosseumGame **out);

/**
 * # Safety
 * `game` must be NULL or a handle from this library that is not used again.
 */
void colosseum_game_free(struct ColosseumGame *game);

/**
 * Number of seats, or 0 for a NULL handle.
 *
 * # Safety
 * `game` must be NULL or a live handle.
 */
size_t colosseum_game_num_players(const struct ColosseumGame *game);

/**
 * # Safety
 * `game` must be NULL or a live handle.
 */
bool colosseum_game_is_terminal(const struct ColosseumGame *game);

/**
 * Players expected to act now, as a JSON array of seat indices.
 *
 * # Safety
 * `game` must be a live handle and `out` a valid pointer.
 */
enum ColosseumStatus colosseum_game_current_players(const struct ColosseumGame *game, char **out);

/**
 * Legal actions of `player` as a JSON array of action strings.
 *
 * # Safety
 * `game` must be a live handle and `out` a valid pointer.
 */
enum ColosseumStatus colosseum_game_legal_actions(const struct ColosseumGame *game,
                                                  size_t player,
                                                  char **out);

/**
 * What `player` is allowed to see, as JSON.
 *
 * # Safety
 * `game` must be a live handle and `out` a valid pointer.
 */
enum ColosseumStatus colosseum_game_observe(const struct ColosseumGame *game,
                                            size_t player,
                                            char **out);

/**
 * Applies a joint action such as `{"0":"forward","1":"left"}`.
 *
 * On success the handle holds the next state and, if `rewards` is not
 * NULL, the step rewards are written to `rewards[0..num_players]`. On
 * failure the handle is unchanged.
 *
 * # Safety
 * `game` must be a live handle, `actions_json` a valid string, and
 * `rewards` NULL or writable for `rewards_len` doubles.
 */
enum ColosseumStatus colosseum_game_step(struct ColosseumGame *game,
                                         const char *actions_json,
                                         double *rewards,
                                         size_t rewards_len);

/**
 * Final ranks and total rewards as `{"ranks":[..],"total_reward":[..]}`.
 *
 * # Safety
 * `game` must be a live handle and `out` a valid pointer.
 */
enum ColosseumStatus colosseum_game_rankings(const struct ColosseumGame *game, char **out);

/**
 * ASCII picture of the state.
 *
 * # Safety
 * `game` must be a live handle and `out` a valid pointer.
 */
enum ColosseumStatus colosseum_game_render(const struct ColosseumGame *game, char **out);

/**
 * Full state, hidden information included.
 *
 * # Safety
 * `game` must be a live handle and `out` a valid pointer.
 */
enum ColosseumStatus colosseum_game_to_json(const struct ColosseumGame *game, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLOSSEUM_H */
