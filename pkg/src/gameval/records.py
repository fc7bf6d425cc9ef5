"""Record types shared across the pipeline and their wire form.

Every record serializes to a flat dict with a fixed field order so the
line-delimited stores are stable enough for byte-exact golden tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .games import (
    Board,
    CompletionEffect,
    Finite,
    GameSpec,
    Infinite,
    LineRule,
)
from .metrics import combine_payoff
from .prompts import Query

#: Trace-coding labels: three reasoning methods plus five funness factors.
CODE_LABELS = (
    "ExplicitSimulation",
    "AnalogicalReasoning",
    "MathematicalComputation",
    "Balance",
    "Challenge",
    "Length",
    "StrategicRichness",
    "Novelty",
)


def spec_to_record(spec: GameSpec) -> dict:
    board: dict | str
    if isinstance(spec.board, Finite):
        board = {"rows": spec.board.rows, "cols": spec.board.cols}
    else:
        board = "infinite"
    return {
        "type": "game_spec",
        "game_id": spec.game_id,
        "category": spec.category,
        "board": board,
        "k_p1": spec.k_p1,
        "k_p2": spec.k_p2,
        "line_rule_p1": spec.line_rule_p1.value,
        "line_rule_p2": spec.line_rule_p2.value,
        "completion_effect": spec.completion_effect.value,
        "opening_placements_p1": spec.opening_placements_p1,
        "opening_placements_p2": spec.opening_placements_p2,
        "max_plies": spec.max_plies,
    }


def spec_from_record(rec: dict) -> GameSpec:
    raw = rec["board"]
    board: Board = Infinite() if raw == "infinite" else Finite(raw["rows"], raw["cols"])
    return GameSpec(
        board=board,
        k_p1=rec["k_p1"],
        k_p2=rec["k_p2"],
        line_rule_p1=LineRule(rec["line_rule_p1"]),
        line_rule_p2=LineRule(rec["line_rule_p2"]),
        completion_effect=CompletionEffect(rec["completion_effect"]),
        opening_placements_p1=rec["opening_placements_p1"],
        opening_placements_p2=rec["opening_placements_p2"],
        max_plies=rec["max_plies"],
        game_id=rec["game_id"],
        category=rec["category"],
    )


@dataclass(frozen=True)
class JudgmentSample:
    """One evaluator's answer to one query for one game.

    Payoff samples carry ``q1``/``q2`` (0-100 scales) and the derived
    ``payoff``; funness samples carry ``funness`` only.
    """

    evaluator_id: str
    game_id: str
    query: Query
    rollout_index: int
    q1_win_given_not_draw: float | None = None
    q2_draw: float | None = None
    funness: float | None = None
    payoff: float | None = None
    reasoning_tokens: int | None = None

    def __post_init__(self) -> None:
        if self.rollout_index < 0:
            raise ValueError("rollout_index must be non-negative")
        if self.query is Query.PAYOFF:
            if self.payoff is None:
                raise ValueError("payoff samples need a payoff value")
            if not -1 <= self.payoff <= 1:
                raise ValueError(f"payoff out of range: {self.payoff}")
            if (self.q1_win_given_not_draw is None) != (self.q2_draw is None):
                raise ValueError("q1 and q2 must be present together")
            if self.funness is not None:
                raise ValueError("payoff samples must not carry funness")
        else:
            if self.funness is None:
                raise ValueError("funness samples need a funness value")
            if not (self.q1_win_given_not_draw is None and self.q2_draw is None
                    and self.payoff is None):
                raise ValueError("funness samples carry funness only")

    @classmethod
    def from_payoff_answers(
        cls,
        evaluator_id: str,
        game_id: str,
        rollout_index: int,
        q1: float,
        q2: float,
        reasoning_tokens: int | None = None,
    ) -> "JudgmentSample":
        return cls(
            evaluator_id=evaluator_id,
            game_id=game_id,
            query=Query.PAYOFF,
            rollout_index=rollout_index,
            q1_win_given_not_draw=q1,
            q2_draw=q2,
            payoff=combine_payoff(q1, q2),
            reasoning_tokens=reasoning_tokens,
        )


@dataclass(frozen=True)
class FailureRecord:
    """A rollout that produced no usable judgment, with the reason why."""

    evaluator_id: str
    game_id: str
    query: Query
    rollout_index: int
    reason: str


def sample_to_record(s: JudgmentSample) -> dict:
    return {
        "type": "judgment",
        "evaluator_id": s.evaluator_id,
        "game_id": s.game_id,
        "query": s.query.value,
        "rollout_index": s.rollout_index,
        "q1_win_given_not_draw": s.q1_win_given_not_draw,
        "q2_draw": s.q2_draw,
        "funness": s.funness,
        "payoff": s.payoff,
        "reasoning_tokens": s.reasoning_tokens,
    }


def failure_to_record(f: FailureRecord) -> dict:
    return {
        "type": "failure",
        "evaluator_id": f.evaluator_id,
        "game_id": f.game_id,
        "query": f.query.value,
        "rollout_index": f.rollout_index,
        "reason": f.reason,
    }


def sample_from_record(rec: dict) -> JudgmentSample | FailureRecord:
    if rec["type"] == "failure":
        return FailureRecord(
            evaluator_id=rec["evaluator_id"],
            game_id=rec["game_id"],
            query=Query(rec["query"]),
            rollout_index=rec["rollout_index"],
            reason=rec["reason"],
        )
    sample = JudgmentSample(
        evaluator_id=rec["evaluator_id"],
        game_id=rec["game_id"],
        query=Query(rec["query"]),
        rollout_index=rec["rollout_index"],
        q1_win_given_not_draw=rec["q1_win_given_not_draw"],
        q2_draw=rec["q2_draw"],
        funness=rec["funness"],
        payoff=rec["payoff"],
        reasoning_tokens=rec["reasoning_tokens"],
    )
    return sample


@dataclass
class TraceRecord:
    """Raw model output for one rollout, with parse state and coder labels."""

    evaluator_id: str
    game_id: str
    query: Query
    rollout_index: int
    raw_text: str
    trace_text: str | None = None
    reasoning_tokens: int | None = None
    parse_status: str = "failed"  # "ok" | "filtered" | "failed"
    q1: float | None = None
    q2: float | None = None
    funness: float | None = None
    failure_reason: str | None = None
    coder_labels: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self) -> None:
        unknown = set(self.coder_labels) - set(CODE_LABELS)
        if unknown:
            raise ValueError(f"unknown coder labels: {sorted(unknown)}")


def trace_to_record(t: TraceRecord) -> dict:
    return {
        "type": "trace",
        "evaluator_id": t.evaluator_id,
        "game_id": t.game_id,
        "query": t.query.value,
        "rollout_index": t.rollout_index,
        "raw_text": t.raw_text,
        "trace_text": t.trace_text,
        "reasoning_tokens": t.reasoning_tokens,
        "parse_status": t.parse_status,
        "q1": t.q1,
        "q2": t.q2,
        "funness": t.funness,
        "failure_reason": t.failure_reason,
        "coder_labels": t.coder_labels,
    }


def trace_from_record(rec: dict) -> TraceRecord:
    return TraceRecord(
        evaluator_id=rec["evaluator_id"],
        game_id=rec["game_id"],
        query=Query(rec["query"]),
        rollout_index=rec["rollout_index"],
        raw_text=rec["raw_text"],
        trace_text=rec["trace_text"],
        reasoning_tokens=rec["reasoning_tokens"],
        parse_status=rec["parse_status"],
        q1=rec["q1"],
        q2=rec["q2"],
        funness=rec["funness"],
        failure_reason=rec["failure_reason"],
        coder_labels=dict(rec["coder_labels"]),
    )


def solve_to_record(game_id: str, value: int | None, method: str,
                    nodes_or_iterations: int, seed: int) -> dict:
    return {
        "type": "solve",
        "game_id": game_id,
        "value": value,
        "method": method,
        "nodes_or_iterations": nodes_or_iterations,
        "seed": seed,
    }
