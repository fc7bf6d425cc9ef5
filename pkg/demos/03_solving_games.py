"""Game-theoretic payoffs: exact search where affordable, MCTS elsewhere.

Run: python demos/03_solving_games.py
"""

from gameval import (
    Finite,
    GameSpec,
    Infinite,
    SolverPolicy,
    estimate_via_mcts,
    game_theoretic_payoff,
    solve_exact,
    tic_tac_toe,
)

# Small finite games solve exactly: memoized alpha-beta over
# symmetry-canonical states.
for spec in (tic_tac_toe(), GameSpec(Finite(2, 2), 2, 2), GameSpec(Finite(2, 4), 3, 3)):
    print(f"{spec.board.rows}x{spec.board.cols} k={spec.k_p1}: exact value {solve_exact(spec)}")

# The MCTS estimator reports a value only when its running root mean has
# settled onto one of -1/0/+1; otherwise the game is "not estimable".
spec = GameSpec(Finite(2, 3), 2, 2)
print("2x3 k=2 mcts estimate:", estimate_via_mcts(spec, iterations=20_000, seed=0))

# The combined router records which method produced each value.
policy = SolverPolicy(node_budget=20_000, mcts_iterations=4000)
for spec in (
    tic_tac_toe(),
    GameSpec(Infinite(), 4, 4, max_plies=40, game_id="unbounded"),
    GameSpec(Finite(10, 10), 9, 9, game_id="too-big"),
):
    record = game_theoretic_payoff(spec, policy)
    print(
        f"{record.game_id or 'tic-tac-toe':12s} value={record.value} "
        f"method={record.method} work={record.nodes_or_iterations}"
    )
