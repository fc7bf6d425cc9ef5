"""Rule engine for the grid game family.

Every game in the corpus is a two-player piece-placement game on a grid:
players alternate placing pieces, and completing ``k`` collinear pieces
either wins or (in the misere variant) loses. Variants differ in board
shape (finite rectangle or unbounded plane), per-player ``k``, per-player
line restrictions (no diagonals / only diagonals), and opening handicaps
(a player may place several pieces on their first turn).

All types are immutable values; all operations are pure functions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

Cell = tuple[int, int]  # (row, col), signed integers
Move = frozenset[Cell]  # all placements of one turn

P1 = 1
P2 = 2

ORTHOGONAL_DIRS = ((0, 1), (1, 0))
DIAGONAL_DIRS = ((1, 1), (1, -1))


class GameRuleError(ValueError):
    """An operation was called against the rules of the game."""


class IllegalMoveError(GameRuleError):
    """A move violates the placement rules; the message names the cell."""


class TerminalStateError(GameRuleError):
    """An operation requiring a live game was called on a finished one."""


class LineRule(Enum):
    """Which line directions count toward a player's completion."""

    ALL = "all"
    NO_DIAGONAL = "no_diagonal"
    ONLY_DIAGONAL = "only_diagonal"

    @property
    def directions(self) -> tuple[Cell, ...]:
        if self is LineRule.NO_DIAGONAL:
            return ORTHOGONAL_DIRS
        if self is LineRule.ONLY_DIAGONAL:
            return DIAGONAL_DIRS
        return ORTHOGONAL_DIRS + DIAGONAL_DIRS


class CompletionEffect(Enum):
    """What completing a k-line does to the completing player."""

    WIN = "win"
    LOSE = "lose"


class Status(Enum):
    P1_WIN = "p1_win"
    P2_WIN = "p2_win"
    DRAW = "draw"
    ONGOING = "ongoing"


#: Payoff from player 1's perspective for each terminal status.
PAYOFF = {Status.P1_WIN: 1, Status.DRAW: 0, Status.P2_WIN: -1}


@dataclass(frozen=True)
class Finite:
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"board dimensions must be positive, got {self.rows}x{self.cols}")

    @property
    def cells(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class Infinite:
    pass


Board = Finite | Infinite

#: Category labels for the game corpus, verbatim.
CATEGORIES = (
    "K in a Row (Square)",
    "K in a Row (Rectangle)",
    "Infinite Board",
    "K in a Row Loses",
    "No Diagonal Win Allowed",
    "Only Diagonal Win Allowed",
    "First Player Moves 2 pieces",
    "Second Player Moves 2 Pieces",
    "First Player Handicap (P1 no diag)",
    "First Player Handicap (P1 only diag)",
    "Second Player K-1 to Win",
)


@dataclass(frozen=True)
class GameSpec:
    """Complete rule description of one game variant.

    ``max_plies`` is a draw cap: the game is declared drawn once that many
    moves have been made. It is mandatory for infinite boards, optional
    (``None``) for finite ones.
    """

    board: Board
    k_p1: int
    k_p2: int
    line_rule_p1: LineRule = LineRule.ALL
    line_rule_p2: LineRule = LineRule.ALL
    completion_effect: CompletionEffect = CompletionEffect.WIN
    opening_placements_p1: int = 1
    opening_placements_p2: int = 1
    max_plies: int | None = None
    game_id: str = ""
    category: str = ""

    def __post_init__(self) -> None:
        if self.k_p1 < 2 or self.k_p2 < 2:
            raise ValueError(f"k must be >= 2, got k_p1={self.k_p1}, k_p2={self.k_p2}")
        if self.opening_placements_p1 < 1 or self.opening_placements_p2 < 1:
            raise ValueError("opening placements must be >= 1")
        if isinstance(self.board, Infinite) and self.max_plies is None:
            raise ValueError("infinite boards require an explicit max_plies draw cap")
        if self.max_plies is not None and self.max_plies < 1:
            raise ValueError("max_plies must be positive")

    def k_for(self, player: int) -> int:
        return self.k_p1 if player == P1 else self.k_p2

    def line_rule_for(self, player: int) -> LineRule:
        return self.line_rule_p1 if player == P1 else self.line_rule_p2

    def opening_placements_for(self, player: int) -> int:
        return self.opening_placements_p1 if player == P1 else self.opening_placements_p2

    def rule_key(self) -> tuple:
        """Rule identity, ignoring ``game_id``/``category`` labels."""
        return (
            self.board,
            self.k_p1,
            self.k_p2,
            self.line_rule_p1,
            self.line_rule_p2,
            self.completion_effect,
            self.opening_placements_p1,
            self.opening_placements_p2,
            self.max_plies,
        )


def tic_tac_toe() -> GameSpec:
    """The base game every variant is measured against."""
    return GameSpec(
        board=Finite(3, 3), k_p1=3, k_p2=3, game_id="tic-tac-toe", category="K in a Row (Square)"
    )


@dataclass(frozen=True)
class GameState:
    """Sparse board occupancy plus turn bookkeeping.

    Treat as an immutable value: ``apply_move`` returns a new state and
    never mutates its input. ``placements_left_this_turn`` is the number
    of pieces ``to_move`` still owes for the current turn (greater than 1
    only on an opening-handicap first turn).
    """

    occupancy: dict[Cell, int] = field(default_factory=dict)
    to_move: int = P1
    ply: int = 0
    placements_left_this_turn: int = 1

    def piece_count(self, player: int) -> int:
        return sum(1 for p in self.occupancy.values() if p == player)


def initial_state(spec: GameSpec) -> GameState:
    return GameState(
        occupancy={},
        to_move=P1,
        ply=0,
        placements_left_this_turn=placements_this_turn(P1, 0, spec),
    )


def placements_this_turn(player: int, ply: int, spec: GameSpec) -> int:
    """Pieces placed on the turn taken by ``player`` at ``ply``.

    A player may place more than one piece only on their first turn
    (ply 0 for player 1, ply 1 for player 2).
    """
    if player == P1 and ply == 0:
        return spec.opening_placements_p1
    if player == P2 and ply == 1:
        return spec.opening_placements_p2
    return 1


def other(player: int) -> int:
    return P2 if player == P1 else P1


def move_order_key(move: Move) -> list[Cell]:
    """Canonical (row-major) sort key for moves; used for tie-breaking."""
    return sorted(move)


def in_bounds(cell: Cell, board: Board) -> bool:
    if isinstance(board, Infinite):
        return True
    r, c = cell
    return 0 <= r < board.rows and 0 <= c < board.cols


def _run_length(occupancy: dict[Cell, int], player: int, start: Cell, d: Cell) -> int:
    r, c = start
    dr, dc = d
    n = 0
    while occupancy.get((r, c)) == player:
        n += 1
        r += dr
        c += dc
    return n


def max_line(occupancy: dict[Cell, int], player: int, rule: LineRule) -> int:
    """Length of the player's longest line in any allowed direction."""
    best = 0
    for (r, c), p in occupancy.items():
        if p != player:
            continue
        for dr, dc in rule.directions:
            if occupancy.get((r - dr, c - dc)) == player:
                continue  # not the start of the run
            n = _run_length(occupancy, player, (r, c), (dr, dc))
            if n > best:
                best = n
    return best


def has_completed_line(occupancy: dict[Cell, int], player: int, spec: GameSpec) -> bool:
    return max_line(occupancy, player, spec.line_rule_for(player)) >= spec.k_for(player)


def placement_completes_line(
    occupancy: dict[Cell, int], cells: Iterable[Cell], player: int, spec: GameSpec
) -> bool:
    """Whether placing ``cells`` for ``player`` completes a k-line.

    Incremental variant of ``has_completed_line``: only lines through the
    new cells are scanned. ``cells`` are treated as the player's whether
    or not they are already present in ``occupancy``, so the check works
    both after a placement and hypothetically before one.
    """
    cellset = frozenset(cells)
    k = spec.k_for(player)

    def mine(cell: Cell) -> bool:
        return cell in cellset or occupancy.get(cell) == player

    for cell in cellset:
        for dr, dc in spec.line_rule_for(player).directions:
            n = 1
            r, c = cell[0] - dr, cell[1] - dc
            while mine((r, c)):
                n += 1
                r -= dr
                c -= dc
            r, c = cell[0] + dr, cell[1] + dc
            while mine((r, c)):
                n += 1
                r += dr
                c += dc
            if n >= k:
                return True
    return False


def terminal_status(state: GameState, spec: GameSpec) -> Status:
    """Outcome of the game at ``state``: a win, a draw, or ongoing.

    With ``CompletionEffect.LOSE`` the player holding the completed line
    is the loser. If both players hold completed lines (unreachable in
    legal play), the line made by the most recent mover decides.
    """
    p1_done = has_completed_line(state.occupancy, P1, spec)
    p2_done = has_completed_line(state.occupancy, P2, spec)
    if p1_done or p2_done:
        if p1_done and p2_done:
            completer = other(state.to_move)
        else:
            completer = P1 if p1_done else P2
        if spec.completion_effect is CompletionEffect.WIN:
            winner = completer
        else:
            winner = other(completer)
        return Status.P1_WIN if winner == P1 else Status.P2_WIN
    if isinstance(spec.board, Finite) and len(state.occupancy) >= spec.board.cells:
        return Status.DRAW
    if spec.max_plies is not None and state.ply >= spec.max_plies:
        return Status.DRAW
    return Status.ONGOING


def frontier_cells(occupancy: dict[Cell, int], reach: int = 2) -> set[Cell]:
    """Empty cells within Chebyshev distance ``reach`` of any occupied cell.

    The bounded candidate set for infinite boards; distance 2 suffices to
    extend or block any line. An empty board yields the origin only.
    """
    if not occupancy:
        return {(0, 0)}
    out: set[Cell] = set()
    for r, c in occupancy:
        for dr in range(-reach, reach + 1):
            for dc in range(-reach, reach + 1):
                cand = (r + dr, c + dc)
                if cand not in occupancy:
                    out.add(cand)
    return out


def candidate_cells(state: GameState, spec: GameSpec) -> list[Cell]:
    """Empty cells the current player may place on, in row-major order."""
    if isinstance(spec.board, Finite):
        cells = [
            (r, c)
            for r in range(spec.board.rows)
            for c in range(spec.board.cols)
            if (r, c) not in state.occupancy
        ]
        return cells
    return sorted(frontier_cells(state.occupancy))


def _multi_placement_moves(state: GameState, spec: GameSpec, n: int) -> list[Move]:
    if isinstance(spec.board, Finite):
        return [frozenset(combo) for combo in itertools.combinations(candidate_cells(state, spec), n)]
    # Infinite board: grow the placement set through the frontier so the
    # candidate set stays finite. Placements are unordered, so dedupe.
    moves: set[Move] = set()

    def grow(chosen: tuple[Cell, ...]) -> None:
        if len(chosen) == n:
            moves.add(frozenset(chosen))
            return
        occ = dict(state.occupancy)
        occ.update({cell: state.to_move for cell in chosen})
        for cell in frontier_cells(occ):
            grow(chosen + (cell,))

    grow(())
    return sorted(moves, key=sorted)


def legal_moves(state: GameState, spec: GameSpec) -> list[Move]:
    """All legal moves for the player to move, in canonical order.

    Each move carries every placement of the turn, so opening-handicap
    turns yield multi-cell moves. Raises ``TerminalStateError`` on
    finished games.
    """
    if terminal_status(state, spec) is not Status.ONGOING:
        raise TerminalStateError("no legal moves: game is over")
    n = placements_this_turn(state.to_move, state.ply, spec)
    if n == 1:
        return [frozenset({cell}) for cell in candidate_cells(state, spec)]
    return _multi_placement_moves(state, spec, n)


def _validate_move(state: GameState, move: Move, spec: GameSpec) -> None:
    if terminal_status(state, spec) is not Status.ONGOING:
        raise TerminalStateError("cannot move: game is over")
    n = placements_this_turn(state.to_move, state.ply, spec)
    if len(move) != n:
        raise IllegalMoveError(f"move must place exactly {n} piece(s), got {len(move)}")
    for cell in move:
        if cell in state.occupancy:
            raise IllegalMoveError(f"cell {cell} is already occupied")
        if not in_bounds(cell, spec.board):
            raise IllegalMoveError(f"cell {cell} is outside the board")
    if isinstance(spec.board, Infinite):
        # Placement order is free, but every cell must be reachable through
        # the frontier of the state plus the cells placed so far.
        remaining = set(move)
        occ = dict(state.occupancy)
        while remaining:
            frontier = frontier_cells(occ)
            reachable = remaining & frontier
            if not reachable:
                cell = sorted(remaining)[0]
                raise IllegalMoveError(f"cell {cell} is outside the placement frontier")
            for cell in reachable:
                occ[cell] = state.to_move
            remaining -= reachable


def apply_move(state: GameState, move: Move, spec: GameSpec) -> GameState:
    """Return the state after the current player makes ``move``.

    The input state is never mutated. Raises ``IllegalMoveError`` naming
    the offending cell for illegal placements.
    """
    _validate_move(state, move, spec)
    occupancy = dict(state.occupancy)
    for cell in move:
        occupancy[cell] = state.to_move
    nxt = other(state.to_move)
    nxt_ply = state.ply + 1
    return GameState(
        occupancy=occupancy,
        to_move=nxt,
        ply=nxt_ply,
        placements_left_this_turn=placements_this_turn(nxt, nxt_ply, spec),
    )


# --- symmetry canonicalization ---------------------------------------------

def _square_transforms(n: int):
    m = n - 1
    return (
        lambda r, c: (r, c),
        lambda r, c: (c, m - r),
        lambda r, c: (m - r, m - c),
        lambda r, c: (m - c, r),
        lambda r, c: (r, m - c),
        lambda r, c: (m - r, c),
        lambda r, c: (c, r),
        lambda r, c: (m - c, m - r),
    )


def _rect_transforms(rows: int, cols: int):
    mr, mc = rows - 1, cols - 1
    return (
        lambda r, c: (r, c),
        lambda r, c: (mr - r, mc - c),
        lambda r, c: (r, mc - c),
        lambda r, c: (mr - r, c),
    )


def board_symmetries(spec: GameSpec):
    """The symmetry group preserving the spec's board geometry.

    Square boards admit all eight dihedral transforms; rectangles only
    identity, 180-degree rotation, and the two axis mirrors. Per-player
    rules are attached to player identity, never permuted, so no
    transform swaps players. All of these also preserve every line rule,
    since the orthogonal and diagonal direction classes map to
    themselves.
    """
    if isinstance(spec.board, Finite):
        if spec.board.rows == spec.board.cols:
            return _square_transforms(spec.board.rows)
        return _rect_transforms(spec.board.rows, spec.board.cols)
    return None  # infinite: handled via bounding-box normalization


def canonicalize(state: GameState, spec: GameSpec) -> tuple:
    """Symmetry-invariant key for transposition tables.

    States related by a spec-preserving board symmetry (plus, on infinite
    boards, a translation) share a key; states differing in ``to_move``
    or ``ply`` never do.
    """
    items = state.occupancy.items()
    if isinstance(spec.board, Finite):
        best = min(
            tuple(sorted((t(r, c), p) for (r, c), p in items))
            for t in board_symmetries(spec)
        )
    elif not state.occupancy:
        best = ()
    else:
        r0 = min(r for r, _ in state.occupancy)
        c0 = min(c for _, c in state.occupancy)
        shifted = [((r - r0, c - c0), p) for (r, c), p in items]
        h = max(r for (r, _), _ in shifted) + 1
        w = max(c for (_, c), _ in shifted) + 1
        best = min(
            tuple(sorted((t(r, c), p) for (r, c), p in shifted))
            for t in _rect_transforms(h, w)
        )
    return (best, state.to_move, state.ply)


def novelty_traits(spec: GameSpec) -> int:
    """How many rule features differ from base Tic-Tac-Toe (which scores 0).

    Counted features: board other than 3x3, any k other than 3, any line
    restriction, the misere completion rule, any multi-piece opening, and
    unequal k between the players.
    """
    traits = 0
    if isinstance(spec.board, Infinite) or (spec.board.rows, spec.board.cols) != (3, 3):
        traits += 1
    if spec.k_p1 != 3 or spec.k_p2 != 3:
        traits += 1
    if spec.line_rule_p1 is not LineRule.ALL or spec.line_rule_p2 is not LineRule.ALL:
        traits += 1
    if spec.completion_effect is CompletionEffect.LOSE:
        traits += 1
    if spec.opening_placements_p1 > 1 or spec.opening_placements_p2 > 1:
        traits += 1
    if spec.k_p1 != spec.k_p2:
        traits += 1
    return traits


def random_playout(
    state: GameState, spec: GameSpec, rng, max_plies: int | None = None
) -> Status:
    """Play uniformly random moves until the game ends; returns the outcome.

    ``max_plies`` optionally caps the playout itself (returning DRAW at
    the cap) on top of any cap in the spec.
    """
    status = terminal_status(state, spec)
    while status is Status.ONGOING:
        if max_plies is not None and state.ply >= max_plies:
            return Status.DRAW
        moves = legal_moves(state, spec)
        state = apply_move(state, moves[int(rng.integers(len(moves)))], spec)
        status = terminal_status(state, spec)
    return status
