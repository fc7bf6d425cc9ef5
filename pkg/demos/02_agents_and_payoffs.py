"""Agents of graded sophistication evaluating games by self-play.

Each agent pair plays a game repeatedly; the win/draw/loss frequencies
become that agent's payoff evaluation of the game, comparable to the
game-theoretic optimum.

Run: python demos/02_agents_and_payoffs.py
"""

from gameval import (
    AgentConfig,
    AgentKind,
    Finite,
    GameSpec,
    agent_payoff_estimate,
    solve_exact,
    tic_tac_toe,
)

games = [
    tic_tac_toe(),
    GameSpec(Finite(2, 2), 2, 2, game_id="tiny"),
    GameSpec(Finite(3, 3), 3, 2, game_id="p2-favored"),
    GameSpec(Finite(3, 3), 3, 3, opening_placements_p1=2, game_id="p1-favored"),
]

agents = {
    "random": (AgentConfig(AgentKind.RANDOM), 400),
    "intuitive": (AgentConfig(AgentKind.INTUITIVE), 200),
    "expert": (AgentConfig(AgentKind.EXPERT, expert_depth=5), 1),
    "mcts": (AgentConfig(AgentKind.MCTS, mcts_iterations=300), 40),
}

print(f"{'game':12s} {'optimal':>8s} " + " ".join(f"{n:>10s}" for n in agents))
for spec in games:
    optimal = solve_exact(spec)
    row = f"{spec.game_id:12s} {optimal:>+8d} "
    for name, (config, n_games) in agents.items():
        est = agent_payoff_estimate(spec, config, config, n_games=n_games, seed=7)
        row += f"{est.payoff_mean:>+10.2f} "
    print(row)

print()
print("Sharper play tracks the optimal value; random play drifts toward")
print("the first mover's raw advantage.")
