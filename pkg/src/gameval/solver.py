"""Game-theoretic payoff of a game spec, where feasible.

Small finite games are solved exactly by memoized alpha-beta negamax;
everything else falls back to a root-value MCTS estimate that only
reports a payoff when the running root mean has settled onto one of
{-1, 0, +1}. Both routes reuse the rule engine's terminal logic, so
misere and handicap variants need no special cases here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .agents import UctSearch
from .games import (
    P1,
    PAYOFF,
    CompletionEffect,
    Finite,
    GameSpec,
    GameState,
    Status,
    apply_move,
    canonicalize,
    initial_state,
    legal_moves,
    move_order_key,
    placement_completes_line,
    terminal_status,
)

EXACT = 0
LOWER = 1
UPPER = 2


class _BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class SolverPolicy:
    """Routing parameters for ``game_theoretic_payoff``."""

    node_budget: int = 50_000_000
    mcts_iterations: int = 200_000
    mcts_epsilon: float = 0.05
    mcts_window: int | None = None  # default: 10% of iterations
    mcts_exploration: float = 1.4
    seed: int = 0


@dataclass(frozen=True)
class SolveRecord:
    """Provenance-carrying result of one payoff computation."""

    game_id: str
    value: int | None
    method: str  # "exact" | "mcts" | "none"
    nodes_or_iterations: int
    seed: int


class _ExactSolver:
    def __init__(self, spec: GameSpec, node_budget: int):
        self.spec = spec
        self.budget = node_budget
        self.nodes = 0
        self.table: dict[tuple, tuple[int, float]] = {}

    def value(self, state: GameState) -> float:
        return self._negamax(state, -2.0, 2.0)

    def _negamax(self, state: GameState, alpha: float, beta: float) -> float:
        status = terminal_status(state, self.spec)
        if status is not Status.ONGOING:
            payoff = PAYOFF[status]
            return float(payoff if state.to_move == P1 else -payoff)

        key = canonicalize(state, self.spec)
        hit = self.table.get(key)
        if hit is not None:
            flag, v = hit
            if flag == EXACT:
                return v
            if flag == LOWER and v >= beta:
                return v
            if flag == UPPER and v <= alpha:
                return v

        self.nodes += 1
        if self.nodes > self.budget:
            raise _BudgetExceeded

        spec = self.spec
        moves = legal_moves(state, spec)
        win_first = spec.completion_effect is CompletionEffect.WIN
        def completes(m):
            return placement_completes_line(state.occupancy, m, state.to_move, spec)

        moves.sort(key=lambda m: (not completes(m) if win_first else completes(m), move_order_key(m)))
        alpha0 = alpha
        best = -math.inf
        for move in moves:
            v = -self._negamax(apply_move(state, move, spec), -beta, -alpha)
            if v > best:
                best = v
            if best > alpha:
                alpha = best
            if alpha >= beta or best >= 1.0:
                break

        if best <= alpha0:
            flag = UPPER
        elif best >= beta:
            flag = LOWER
        else:
            flag = EXACT
        self.table[key] = (flag, best)
        return best


def solve_exact(spec: GameSpec, node_budget: int = 50_000_000) -> int | None:
    """Minimax value of the full game tree, or None on budget exhaustion.

    Finite boards only. The search is memoized on symmetry-canonical
    state keys; multi-placement openings expand as single plies with
    combined moves, exactly as in the rule engine.
    """
    if not isinstance(spec.board, Finite):
        raise ValueError("exact solving is defined for finite boards only")
    solver = _ExactSolver(spec, node_budget)
    try:
        v = solver.value(initial_state(spec))
    except _BudgetExceeded:
        return None
    return int(round(v))


def estimate_via_mcts(
    spec: GameSpec,
    iterations: int = 200_000,
    epsilon: float = 0.05,
    window: int | None = None,
    exploration: float = 1.4,
    seed: int = 0,
) -> int | None:
    """Payoff in {-1, 0, +1} that root-value MCTS converged to, if any.

    Runs UCT self-play from the empty board and tracks the running mean
    of root values. The nearest integer payoff is returned only when the
    mean stays within ``epsilon`` of it over the final ``window``
    iterations (default: the last 10%); otherwise the game is not
    estimable and None is returned.
    """
    if window is None:
        window = max(1, iterations // 10)
    if iterations < window:
        raise ValueError("iterations must be >= window")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    search = UctSearch(initial_state(spec), spec, exploration, np.random.default_rng(seed))
    means = np.empty(iterations)
    for i in range(iterations):
        search.run_one()
        means[i] = search.root_mean_value()
    tail = means[-window:]
    v = int(round(tail[-1]))
    if v in (-1, 0, 1) and np.all(np.abs(tail - v) <= epsilon):
        return v
    return None


def game_theoretic_payoff(spec: GameSpec, policy: SolverPolicy = SolverPolicy()) -> SolveRecord:
    """Optimal payoff with provenance: exact when affordable, else MCTS.

    Infinite boards are never solved exactly. When neither route yields a
    value the record carries method "none".
    """
    if isinstance(spec.board, Finite):
        solver = _ExactSolver(spec, policy.node_budget)
        try:
            v = solver.value(initial_state(spec))
        except _BudgetExceeded:
            pass
        else:
            return SolveRecord(
                game_id=spec.game_id,
                value=int(round(v)),
                method="exact",
                nodes_or_iterations=solver.nodes,
                seed=policy.seed,
            )
    est = estimate_via_mcts(
        spec,
        iterations=policy.mcts_iterations,
        epsilon=policy.mcts_epsilon,
        window=policy.mcts_window,
        exploration=policy.mcts_exploration,
        seed=policy.seed,
    )
    return SolveRecord(
        game_id=spec.game_id,
        value=est,
        method="mcts" if est is not None else "none",
        nodes_or_iterations=policy.mcts_iterations,
        seed=policy.seed,
    )
