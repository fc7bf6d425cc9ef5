"""Shared fixtures: category spec menus and independent oracles.

The oracles here deliberately re-derive game semantics from scratch
(full-board window enumeration, permutation-tree negamax without pruning
or memoization) so the engine under test never checks itself.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from gameval.games import (
    CATEGORIES,
    P1,
    P2,
    CompletionEffect,
    Finite,
    GameSpec,
    GameState,
    Infinite,
    LineRule,
    Status,
)

# --- independent terminal oracle -------------------------------------------

_ORTHO = ((0, 1), (1, 0))
_DIAG = ((1, 1), (1, -1))


def _dirs(rule: LineRule):
    if rule is LineRule.NO_DIAGONAL:
        return _ORTHO
    if rule is LineRule.ONLY_DIAGONAL:
        return _DIAG
    return _ORTHO + _DIAG


def oracle_windows(spec: GameSpec, player: int) -> list[tuple]:
    """Every complete k-window available to ``player``, by enumeration.

    Finite boards enumerate all in-bounds windows; for states on infinite
    boards the caller passes occupancy-anchored windows instead.
    """
    assert isinstance(spec.board, Finite)
    k = spec.k_for(player)
    rows, cols = spec.board.rows, spec.board.cols
    wins = []
    for r in range(rows):
        for c in range(cols):
            for dr, dc in _dirs(spec.line_rule_for(player)):
                end = (r + (k - 1) * dr, c + (k - 1) * dc)
                if 0 <= end[0] < rows and 0 <= end[1] < cols:
                    wins.append(tuple((r + i * dr, c + i * dc) for i in range(k)))
    return wins


def oracle_terminal(state: GameState, spec: GameSpec) -> Status:
    """Terminal status by scanning every window of both players."""
    occ = state.occupancy

    def completed(player: int) -> bool:
        if isinstance(spec.board, Finite):
            windows = oracle_windows(spec, player)
        else:
            k = spec.k_for(player)
            windows = []
            for (r, c) in occ:
                for dr, dc in _dirs(spec.line_rule_for(player)):
                    for i in range(k):
                        windows.append(
                            tuple((r + (j - i) * dr, c + (j - i) * dc) for j in range(k))
                        )
        return any(all(occ.get(cell) == player for cell in w) for w in windows)

    done1, done2 = completed(P1), completed(P2)
    if done1 or done2:
        if done1 and done2:
            completer = P1 if state.to_move == P2 else P2
        else:
            completer = P1 if done1 else P2
        if spec.completion_effect is CompletionEffect.LOSE:
            completer = P1 if completer == P2 else P2
        return Status.P1_WIN if completer == P1 else Status.P2_WIN
    if isinstance(spec.board, Finite) and len(occ) == spec.board.cells:
        return Status.DRAW
    if spec.max_plies is not None and state.ply >= spec.max_plies:
        return Status.DRAW
    return Status.ONGOING


# --- independent exhaustive game-value oracle --------------------------------

class OracleBudgetExceeded(Exception):
    pass


def oracle_game_value(spec: GameSpec, node_cap: int = 5_000_000) -> int:
    """Minimax value by pruning-free, memo-free traversal of the move tree.

    Bitboard-based for speed, but structurally brute force: every node
    rescans every window of both players and every legal continuation is
    visited. Raises ``OracleBudgetExceeded`` past ``node_cap`` nodes.
    """
    assert isinstance(spec.board, Finite)
    rows, cols = spec.board.rows, spec.board.cols
    n_cells = rows * cols
    idx = {(r, c): r * cols + c for r in range(rows) for c in range(cols)}

    def masks(player: int) -> list[int]:
        out = []
        for w in oracle_windows(spec, player):
            m = 0
            for cell in w:
                m |= 1 << idx[cell]
            out.append(m)
        return out

    w1, w2 = masks(P1), masks(P2)
    full = (1 << n_cells) - 1
    lose = spec.completion_effect is CompletionEffect.LOSE
    cap = spec.max_plies
    nodes = 0

    def value(m1: int, m2: int, to_move: int, ply: int) -> int:
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise OracleBudgetExceeded
        done1 = any((m1 & w) == w for w in w1)
        done2 = any((m2 & w) == w for w in w2)
        if done1 or done2:
            if done1 and done2:
                completer = P1 if to_move == P2 else P2
            else:
                completer = P1 if done1 else P2
            winner = (P2 if completer == P1 else P1) if lose else completer
            return 1 if winner == P1 else -1
        if (m1 | m2) == full or (cap is not None and ply >= cap):
            return 0
        n_place = 1
        if to_move == P1 and ply == 0:
            n_place = spec.opening_placements_p1
        elif to_move == P2 and ply == 1:
            n_place = spec.opening_placements_p2
        empty = [i for i in range(n_cells) if not ((m1 | m2) >> i) & 1]
        best = None
        for combo in itertools.combinations(empty, n_place):
            bits = 0
            for i in combo:
                bits |= 1 << i
            if to_move == P1:
                v = value(m1 | bits, m2, P2, ply + 1)
            else:
                v = value(m1, m2 | bits, P1, ply + 1)
            score = v if to_move == P1 else -v
            if best is None or score > best:
                best = score
        assert best is not None
        return best if to_move == P1 else -best

    return value(0, 0, P1, 0)


# --- category spec menus ------------------------------------------------------

def specs_by_category() -> dict[str, list[GameSpec]]:
    """A small fixed spec per category, for rule-level property tests."""
    return {
        "K in a Row (Square)": [GameSpec(Finite(3, 3), 3, 3, category=CATEGORIES[0])],
        "K in a Row (Rectangle)": [GameSpec(Finite(3, 5), 3, 3, category=CATEGORIES[1])],
        "Infinite Board": [
            GameSpec(Infinite(), 4, 4, max_plies=20, category=CATEGORIES[2])
        ],
        "K in a Row Loses": [
            GameSpec(
                Finite(4, 4), 3, 3, completion_effect=CompletionEffect.LOSE,
                category=CATEGORIES[3],
            )
        ],
        "No Diagonal Win Allowed": [
            GameSpec(
                Finite(4, 4), 3, 3,
                line_rule_p1=LineRule.NO_DIAGONAL, line_rule_p2=LineRule.NO_DIAGONAL,
                category=CATEGORIES[4],
            )
        ],
        "Only Diagonal Win Allowed": [
            GameSpec(
                Finite(4, 4), 3, 3,
                line_rule_p1=LineRule.ONLY_DIAGONAL, line_rule_p2=LineRule.ONLY_DIAGONAL,
                category=CATEGORIES[5],
            )
        ],
        "First Player Moves 2 pieces": [
            GameSpec(Finite(3, 3), 3, 3, opening_placements_p1=2, category=CATEGORIES[6])
        ],
        "Second Player Moves 2 Pieces": [
            GameSpec(Finite(4, 4), 3, 3, opening_placements_p2=2, category=CATEGORIES[7])
        ],
        "First Player Handicap (P1 no diag)": [
            GameSpec(Finite(3, 3), 3, 3, line_rule_p1=LineRule.NO_DIAGONAL, category=CATEGORIES[8])
        ],
        "First Player Handicap (P1 only diag)": [
            GameSpec(Finite(4, 4), 3, 3, line_rule_p1=LineRule.ONLY_DIAGONAL, category=CATEGORIES[9])
        ],
        "Second Player K-1 to Win": [
            GameSpec(Finite(4, 4), 3, 2, category=CATEGORIES[10])
        ],
    }


@pytest.fixture(scope="session")
def category_specs() -> dict[str, list[GameSpec]]:
    return specs_by_category()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260811)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    try:
        from test_acceptance import ACCEPTANCE_LABELS
    except ImportError:
        return
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if name in ACCEPTANCE_LABELS:
                number, label = ACCEPTANCE_LABELS[name]
                status = "PASS" if outcome == "passed" else "FAIL"
                lines[number] = f"criterion {number} {status}: {label}"
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
