/* Minimal C client: build the stop-game example, bracket its value, and
 * solve the one-round scissors-paper-stone game.
 *
 *   cc -I crates/ffi/include demo.c -L target/release -lblackwell_ffi -lm
 */
#include <stdio.h>

#include "blackwell.h"

int main(void) {
    BwGame *game = NULL;
    if (bw_game_example("stopgame", &game) != BwStatus_Ok) {
        fprintf(stderr, "error: %s\n", bw_last_error_message());
        return 1;
    }
    double lower[11], upper[11];
    if (bw_bracket(game, 10, 8, 1e-6, lower, upper, 11) != BwStatus_Ok) {
        fprintf(stderr, "error: %s\n", bw_last_error_message());
        return 1;
    }
    printf("stopgame depth 10: lower %.9f, upper %.9f\n", lower[10], upper[10]);
    bw_game_free(game);

    if (bw_game_example("sps", &game) != BwStatus_Ok) {
        return 1;
    }
    double value = 0.0;
    char *doc = NULL;
    if (bw_solve_strategy(game, 0, &value, &doc) != BwStatus_Ok) {
        fprintf(stderr, "error: %s\n", bw_last_error_message());
        return 1;
    }
    printf("sps value %.9f, optimal strategy:\n%s", value, doc);
    bw_string_free(doc);
    bw_game_free(game);
    return 0;
}
