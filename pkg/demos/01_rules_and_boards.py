"""Tour of the game family: specs, descriptions, moves, and outcomes.

Run: python demos/01_rules_and_boards.py
"""

import numpy as np

from gameval import (
    CompletionEffect,
    Finite,
    GameSpec,
    Infinite,
    LineRule,
    Status,
    apply_move,
    game_description,
    initial_state,
    legal_moves,
    novelty_traits,
    terminal_status,
    tic_tac_toe,
)

# Every game is described to evaluators by two lines: board and rules.
showcase = [
    tic_tac_toe(),
    GameSpec(Finite(4, 9), 4, 4, game_id="wide"),
    GameSpec(Finite(4, 4), 3, 3, completion_effect=CompletionEffect.LOSE, game_id="misere"),
    GameSpec(Finite(7, 7), 4, 4, line_rule_p1=LineRule.ONLY_DIAGONAL, game_id="handicap"),
    GameSpec(Finite(5, 5), 3, 2, game_id="uneven"),
    GameSpec(Finite(3, 3), 3, 3, opening_placements_p1=2, game_id="double-open"),
    GameSpec(Infinite(), 5, 5, max_plies=60, game_id="unbounded"),
]
for spec in showcase:
    print(f"--- {spec.game_id}: {novelty_traits(spec)} trait(s) off the base game")
    print(game_description(spec))
    print()

# A random playout on the misere game: whoever completes a line loses.
spec = showcase[2]
rng = np.random.default_rng(4)
state = initial_state(spec)
while terminal_status(state, spec) is Status.ONGOING:
    moves = legal_moves(state, spec)
    state = apply_move(state, moves[rng.integers(len(moves))], spec)
print(f"misere playout ended after {state.ply} plies: {terminal_status(state, spec).value}")

# The double-opening game hands player 1 two stones on the first turn.
spec = showcase[5]
opening = legal_moves(initial_state(spec), spec)
print(f"double-open first turn offers {len(opening)} two-cell moves")
