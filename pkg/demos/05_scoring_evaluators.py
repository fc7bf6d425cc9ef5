"""Scoring one evaluator against another, against the optimum, and
against itself (reliability), with bootstrap intervals.

Run: python demos/05_scoring_evaluators.py
"""

import numpy as np

from gameval import (
    AgentConfig,
    AgentKind,
    AgentPairEvaluator,
    Query,
    accuracy_within,
    agent_payoff_estimate,
    bootstrap_ci,
    combine_payoff,
    mean_abs_dev,
    r_squared,
    solve_exact,
    split_half,
    wasserstein_binned,
)
from gameval.store import generate_corpus

# A solvable slice of the corpus: small finite boards only.
corpus = [
    s for s in generate_corpus(count_per_category=4, seed=2)
    if hasattr(s.board, "rows") and s.board.rows * s.board.cols <= 12
]
optima = {s.game_id: solve_exact(s) for s in corpus}
corpus = [s for s in corpus if optima[s.game_id] is not None]
print(f"{len(corpus)} exactly solvable games")

# Two evaluators: shallow heuristic play vs uniform random play.
evaluations = {}
for name, config, n in (
    ("intuitive", AgentConfig(AgentKind.INTUITIVE), 120),
    ("random", AgentConfig(AgentKind.RANDOM), 120),
):
    evaluations[name] = {
        s.game_id: agent_payoff_estimate(s, config, config, n_games=n, seed=3)
        for s in corpus
    }

opt = [optima[s.game_id] for s in corpus]
for name, ev in evaluations.items():
    means = [ev[s.game_id].payoff_mean for s in corpus]
    print(
        f"{name:10s} vs optimal: "
        f"accuracy={accuracy_within(means, opt):.2f} "
        f"deviation={mean_abs_dev(means, opt):.2f} "
        f"r2={r_squared(opt, means):.2f}"
    )

# Distributional distance between the two evaluators, game by game.
distances = [
    wasserstein_binned(
        evaluations["intuitive"][s.game_id].per_game_payoffs,
        evaluations["random"][s.game_id].per_game_payoffs,
        (-1, 1),
    )
    for s in corpus
]
print(f"mean per-game earth-mover distance intuitive vs random: {np.mean(distances):.3f}")

# Bootstrap CI over games for the random evaluator's deviation.
groups = {
    s.game_id: [abs(evaluations["random"][s.game_id].payoff_mean - optima[s.game_id])]
    for s in corpus
}
ci = bootstrap_ci(
    groups, lambda g: float(np.mean([v[0] for v in g.values()])),
    n_boot=2000, seed=0, unit="games",
)
print(f"random deviation {ci.point:.3f}  95% CI [{ci.low:.3f}, {ci.high:.3f}]")

# Split-half reliability of a noisy synthetic judge panel.
rng = np.random.default_rng(0)
signal = {s.game_id: rng.uniform(-1, 1) for s in corpus}
panel = {
    gid: [signal[gid] + rng.normal(0, 0.4) for _ in range(20)] for gid in signal
}
print(f"split-half reliability of the synthetic panel: "
      f"{split_half(panel, n_splits=50, seed=1):.2f}")

# And the payoff combination that turns elicited probabilities into payoffs.
print(f"combine_payoff(60, 50) = {combine_payoff(60, 50):+.2f}")
