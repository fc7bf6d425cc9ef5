"""Gameplay policies of graded sophistication.

Four families: uniform random play, a fast heuristic player mimicking
shallow goal-directed reasoning (win / block / softmax over a line-count
cell score), a depth-limited alpha-beta player, and UCT Monte Carlo tree
search. ``agent_payoff_estimate`` turns head-to-head play into an
expected-payoff evaluation of a game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .games import (
    P1,
    P2,
    PAYOFF,
    Cell,
    CompletionEffect,
    Finite,
    GameSpec,
    GameState,
    Move,
    Status,
    TerminalStateError,
    apply_move,
    frontier_cells,
    in_bounds,
    initial_state,
    legal_moves,
    move_order_key,
    other,
    placement_completes_line,
    placements_this_turn,
    terminal_status,
)


class AgentKind(Enum):
    RANDOM = "random"
    INTUITIVE = "intuitive"
    EXPERT = "expert"
    MCTS = "mcts"


@dataclass(frozen=True)
class AgentConfig:
    kind: AgentKind
    seed: int = 0
    intuitive_temperature: float = 1.0
    expert_depth: int = 5
    mcts_iterations: int = 400
    mcts_exploration: float = 1.4

    def __post_init__(self) -> None:
        if self.expert_depth < 1:
            raise ValueError("expert_depth must be >= 1")
        if self.mcts_iterations < 1:
            raise ValueError("mcts_iterations must be >= 1")
        if self.intuitive_temperature <= 0:
            raise ValueError("intuitive_temperature must be positive")
        if self.mcts_exploration <= 0:
            raise ValueError("mcts_exploration must be positive")

    def label(self) -> str:
        if self.kind is AgentKind.EXPERT:
            return f"expert(depth={self.expert_depth})"
        if self.kind is AgentKind.MCTS:
            return f"mcts(iters={self.mcts_iterations})"
        if self.kind is AgentKind.INTUITIVE:
            return f"intuitive(temp={self.intuitive_temperature:g})"
        return "random"


def _iter_window_starts(cell: Cell, d: Cell, k: int, board) -> list[Cell]:
    """Starts of every k-window through ``cell`` along ``d`` that fits the board."""
    r, c = cell
    dr, dc = d
    starts = []
    for i in range(k):
        start = (r - i * dr, c - i * dc)
        end = (start[0] + (k - 1) * dr, start[1] + (k - 1) * dc)
        if in_bounds(start, board) and in_bounds(end, board):
            starts.append(start)
    return starts


def _window_counts(occ: dict[Cell, int], start: Cell, d: Cell, k: int) -> tuple[int, int]:
    """(player-1 pieces, player-2 pieces) inside one k-window."""
    r, c = start
    dr, dc = d
    n1 = n2 = 0
    for _ in range(k):
        p = occ.get((r, c))
        if p == P1:
            n1 += 1
        elif p == P2:
            n2 += 1
        r += dr
        c += dc
    return n1, n2


def open_line_weight(occ: dict[Cell, int], cell: Cell, player: int, spec: GameSpec) -> float:
    """Weighted count of the player's open k-windows through an empty cell.

    A window is open when it fits the board, lies in one of the player's
    allowed directions, and holds no opponent piece; each open window adds
    1 plus the player's piece count inside it.
    """
    k = spec.k_for(player)
    total = 0.0
    for d in spec.line_rule_for(player).directions:
        for start in _iter_window_starts(cell, d, k, spec.board):
            n1, n2 = _window_counts(occ, start, d, k)
            own, opp = (n1, n2) if player == P1 else (n2, n1)
            if opp == 0:
                total += 1 + own
    return total


def _cell_score(occ: dict[Cell, int], cell: Cell, mover: int, spec: GameSpec) -> float:
    mine = open_line_weight(occ, cell, mover, spec)
    theirs = open_line_weight(occ, cell, other(mover), spec)
    if spec.completion_effect is CompletionEffect.LOSE:
        # Building own lines walks toward a loss, and blocking the
        # opponent's lines spares them the same fate: shun both.
        return -mine - theirs
    return mine - theirs


def line_potential(occ: dict[Cell, int], player: int, spec: GameSpec) -> float:
    """Progress of a player toward completion, summed over open windows.

    Each open window holding at least one of the player's pieces
    contributes ``4 ** pieces``, so nearly complete lines dominate.
    """
    k = spec.k_for(player)
    total = 0.0
    seen: set[tuple[Cell, Cell]] = set()
    for cell, p in occ.items():
        if p != player:
            continue
        for d in spec.line_rule_for(player).directions:
            for start in _iter_window_starts(cell, d, k, spec.board):
                if (start, d) in seen:
                    continue
                seen.add((start, d))
                n1, n2 = _window_counts(occ, start, d, k)
                own, opp = (n1, n2) if player == P1 else (n2, n1)
                if opp == 0:
                    total += 4.0 ** own
    return total


def _leaf_heuristic(state: GameState, spec: GameSpec) -> float:
    """Static value in (-1, 1) from the perspective of the player to move."""
    me = state.to_move
    mine = line_potential(state.occupancy, me, spec)
    theirs = line_potential(state.occupancy, other(me), spec)
    h = (mine - theirs) / (mine + theirs + 1.0)
    if spec.completion_effect is CompletionEffect.LOSE:
        h = -h
    return h


def _completes_own_line(state: GameState, move: Move, spec: GameSpec) -> bool:
    return placement_completes_line(state.occupancy, move, state.to_move, spec)


def _adjacency(occ: dict[Cell, int], move: Move) -> int:
    n = 0
    for r, c in move:
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if (dr or dc) and (r + dr, c + dc) in occ:
                    n += 1
    return n


def _negamax(state: GameState, spec: GameSpec, depth: int, alpha: float, beta: float) -> float:
    status = terminal_status(state, spec)
    if status is not Status.ONGOING:
        payoff = PAYOFF[status]
        return float(payoff if state.to_move == P1 else -payoff)
    if depth == 0:
        return _leaf_heuristic(state, spec)
    moves = legal_moves(state, spec)
    win_first = spec.completion_effect is CompletionEffect.WIN
    moves.sort(
        key=lambda m: (
            not _completes_own_line(state, m, spec) if win_first
            else _completes_own_line(state, m, spec),
            -_adjacency(state.occupancy, m),
            move_order_key(m),
        )
    )
    best = -math.inf
    for move in moves:
        v = -_negamax(apply_move(state, move, spec), spec, depth - 1, -beta, -alpha)
        if v > best:
            best = v
        if best > alpha:
            alpha = best
        if alpha >= beta:
            break
    return best


def _expert_move(state: GameState, spec: GameSpec, depth: int) -> Move:
    best_move = None
    best_value = -math.inf
    for move in sorted(legal_moves(state, spec), key=move_order_key):
        v = -_negamax(apply_move(state, move, spec), spec, depth - 1, -math.inf, -best_value)
        if v > best_value:
            best_value = v
            best_move = move
    return best_move


def _intuitive_move(state: GameState, spec: GameSpec, temperature: float, rng) -> Move:
    moves = sorted(legal_moves(state, spec), key=move_order_key)
    me = state.to_move
    my_win = Status.P1_WIN if me == P1 else Status.P2_WIN
    their_win = Status.P2_WIN if me == P1 else Status.P1_WIN

    outcomes = [terminal_status(apply_move(state, m, spec), spec) for m in moves]
    winning = [m for m, s in zip(moves, outcomes) if s is my_win]
    if winning:
        return winning[0]
    safe = [m for m, s in zip(moves, outcomes) if s is not their_win]
    pool = safe or moves

    threats = _opponent_winning_moves(state, spec)
    if threats:
        cover = [(sum(bool(m & t) for t in threats), m) for m in pool]
        best = max(n for n, _ in cover)
        if best > 0:
            return min((m for n, m in cover if n == best), key=move_order_key)

    scores = np.array(
        [sum(_cell_score(state.occupancy, c, me, spec) for c in m) for m in pool]
    )
    logits = (scores - scores.max()) / temperature
    probs = np.exp(logits)
    probs /= probs.sum()
    return pool[int(rng.choice(len(pool), p=probs))]


def _opponent_winning_moves(state: GameState, spec: GameSpec) -> list[Move]:
    """Moves the opponent could win with immediately, were it their turn.

    Empty in misere games: completing a line there loses, so an opponent
    move can never win on the spot.
    """
    if spec.completion_effect is CompletionEffect.LOSE:
        return []
    opp = other(state.to_move)
    hypothetical = GameState(
        occupancy=state.occupancy,
        to_move=opp,
        ply=state.ply + 1,
        placements_left_this_turn=placements_this_turn(opp, state.ply + 1, spec),
    )
    if terminal_status(hypothetical, spec) is not Status.ONGOING:
        return []
    return [
        m
        for m in legal_moves(hypothetical, spec)
        if _completes_own_line(hypothetical, m, spec)
    ]


# --- UCT search --------------------------------------------------------------

class _UctNode:
    __slots__ = ("state", "untried", "moves", "children", "visits", "value_sum", "terminal_payoff")

    def __init__(self, state: GameState, spec: GameSpec):
        self.state = state
        status = terminal_status(state, spec)
        if status is Status.ONGOING:
            self.terminal_payoff = None
            self.untried = sorted(legal_moves(state, spec), key=move_order_key)
        else:
            self.terminal_payoff = float(PAYOFF[status])
            self.untried = []
        self.moves: list[Move] = []
        self.children: list[_UctNode] = []
        self.visits = 0
        self.value_sum = 0.0  # always from player 1's perspective


class UctSearch:
    """UCT Monte Carlo tree search over a game spec.

    Values are tracked from player 1's perspective; selection flips sign
    for player 2. Playouts are uniformly random and stop at terminal
    states or the spec's ply cap.
    """

    def __init__(self, state: GameState, spec: GameSpec, exploration: float, rng):
        self.spec = spec
        self.exploration = exploration
        self.rng = rng
        self.root = _UctNode(state, spec)

    def run(self, iterations: int) -> None:
        for _ in range(iterations):
            self.run_one()

    def run_one(self) -> float:
        """One select/expand/playout/backup pass; returns the playout value."""
        path = [self.root]
        node = self.root
        while node.terminal_payoff is None and not node.untried and node.children:
            node = self._select_child(node)
            path.append(node)
        if node.terminal_payoff is None and node.untried:
            i = int(self.rng.integers(len(node.untried)))
            move = node.untried.pop(i)
            child = _UctNode(apply_move(node.state, move, self.spec), self.spec)
            node.moves.append(move)
            node.children.append(child)
            node = child
            path.append(node)
        if node.terminal_payoff is not None:
            value = node.terminal_payoff
        else:
            value = self._playout(node.state)
        for n in path:
            n.visits += 1
            n.value_sum += value
        return value

    def root_mean_value(self) -> float:
        return self.root.value_sum / self.root.visits

    def best_move(self) -> Move:
        if not self.root.children:
            raise TerminalStateError("no children at root")
        most = max(c.visits for c in self.root.children)
        ties = [m for m, c in zip(self.root.moves, self.root.children) if c.visits == most]
        return min(ties, key=move_order_key)

    def _select_child(self, node: _UctNode) -> _UctNode:
        sign = 1.0 if node.state.to_move == P1 else -1.0
        log_n = math.log(node.visits)
        best, best_score = None, -math.inf
        for child in node.children:
            exploit = sign * child.value_sum / child.visits
            score = exploit + self.exploration * math.sqrt(log_n / child.visits)
            if score > best_score:
                best_score = score
                best = child
        return best

    def _playout(self, state: GameState) -> float:
        spec = self.spec
        rng = self.rng
        occ = dict(state.occupancy)
        to_move = state.to_move
        ply = state.ply
        if isinstance(spec.board, Finite):
            empties = [
                (r, c)
                for r in range(spec.board.rows)
                for c in range(spec.board.cols)
                if (r, c) not in occ
            ]
        else:
            # Infinite board: keep the frontier incrementally. ``pool`` is
            # an insertion-ordered list that may hold stale entries;
            # ``live`` is the authoritative membership set.
            empties = None
            live = frontier_cells(occ)
            pool = sorted(live)
        while True:
            if spec.max_plies is not None and ply >= spec.max_plies:
                return 0.0
            n = placements_this_turn(to_move, ply, spec)
            if empties is not None:
                if len(empties) < n:
                    return 0.0
                cells = []
                for _ in range(n):
                    i = int(rng.integers(len(empties)))
                    empties[i], empties[-1] = empties[-1], empties[i]
                    cells.append(empties.pop())
            else:
                cells = []
                for _ in range(n):
                    while True:
                        i = int(rng.integers(len(pool)))
                        cell = pool[i]
                        if cell in live:
                            break
                        pool[i] = pool[-1]
                        pool.pop()
                    live.discard(cell)
                    cells.append(cell)
                    occ[cell] = to_move
                    r, c = cell
                    for dr in (-2, -1, 0, 1, 2):
                        for dc in (-2, -1, 0, 1, 2):
                            nb = (r + dr, c + dc)
                            if nb not in occ and nb not in live:
                                live.add(nb)
                                pool.append(nb)
            for cell in cells:
                occ[cell] = to_move
            if placement_completes_line(occ, cells, to_move, spec):
                won = to_move if spec.completion_effect is CompletionEffect.WIN else other(to_move)
                return 1.0 if won == P1 else -1.0
            ply += 1
            if empties is not None and not empties:
                return 0.0
            to_move = other(to_move)


def _mcts_move(state: GameState, spec: GameSpec, config: AgentConfig, rng) -> Move:
    search = UctSearch(state, spec, config.mcts_exploration, rng)
    search.run(config.mcts_iterations)
    return search.best_move()


def choose_move(agent: AgentConfig, state: GameState, spec: GameSpec, rng=None) -> Move:
    """Pick a legal move for the configured agent.

    Deterministic given the agent config, state, and rng stream position.
    Raises ``TerminalStateError`` on finished games.
    """
    if terminal_status(state, spec) is not Status.ONGOING:
        raise TerminalStateError("cannot choose a move in a terminal state")
    if rng is None:
        rng = np.random.default_rng(agent.seed)
    if agent.kind is AgentKind.RANDOM:
        moves = sorted(legal_moves(state, spec), key=move_order_key)
        return moves[int(rng.integers(len(moves)))]
    if agent.kind is AgentKind.INTUITIVE:
        return _intuitive_move(state, spec, agent.intuitive_temperature, rng)
    if agent.kind is AgentKind.EXPERT:
        return _expert_move(state, spec, agent.expert_depth)
    return _mcts_move(state, spec, agent, rng)


def play_game(spec: GameSpec, p1: AgentConfig, p2: AgentConfig, rng_p1, rng_p2) -> Status:
    """Play one full game; returns the terminal status."""
    state = initial_state(spec)
    status = terminal_status(state, spec)
    while status is Status.ONGOING:
        agent, rng = (p1, rng_p1) if state.to_move == P1 else (p2, rng_p2)
        state = apply_move(state, choose_move(agent, state, spec, rng), spec)
        status = terminal_status(state, spec)
    return status


@dataclass(frozen=True)
class PayoffEstimate:
    """Win/draw/loss frequencies from repeated play, player 1's perspective."""

    n_win: int
    n_draw: int
    n_loss: int
    per_game_payoffs: tuple[int, ...]

    @property
    def n_games(self) -> int:
        return self.n_win + self.n_draw + self.n_loss

    @property
    def p_win(self) -> float:
        return self.n_win / self.n_games

    @property
    def p_draw(self) -> float:
        return self.n_draw / self.n_games

    @property
    def p_loss(self) -> float:
        return self.n_loss / self.n_games

    @property
    def payoff_mean(self) -> float:
        return self.p_win - self.p_loss


def agent_payoff_estimate(
    spec: GameSpec,
    p1: AgentConfig,
    p2: AgentConfig,
    n_games: int = 1000,
    seed: int = 0,
) -> PayoffEstimate:
    """Estimate a game's expected payoff by playing it ``n_games`` times.

    Each game draws its own rng streams from (seed, game index), so
    results are reproducible and order-stable regardless of scheduling.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    payoffs = []
    for i in range(n_games):
        rng_p1 = np.random.default_rng([seed, i, 1])
        rng_p2 = np.random.default_rng([seed, i, 2])
        status = play_game(spec, p1, p2, rng_p1, rng_p2)
        payoffs.append(PAYOFF[status])
    return PayoffEstimate(
        n_win=payoffs.count(1),
        n_draw=payoffs.count(0),
        n_loss=payoffs.count(-1),
        per_game_payoffs=tuple(payoffs),
    )
