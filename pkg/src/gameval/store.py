"""Persistence and interchange: record files, corpus generation, ingest.

All stores are line-delimited JSON with a fixed field order per record
type and a leading header line naming the format version. Writes are
append-only; a partially written final line (no trailing newline) is
skipped with a warning on load, while any other malformed line is a hard
error naming its byte offset.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .games import (
    CATEGORIES,
    CompletionEffect,
    Finite,
    GameSpec,
    Infinite,
    LineRule,
    tic_tac_toe,
)
from .prompts import Query
from .records import (
    FailureRecord,
    JudgmentSample,
    sample_from_record,
    spec_from_record,
    spec_to_record,
)

FORMAT_NAME = "gameval.records"
FORMAT_VERSION = 1

#: Default draw cap for infinite-board games.
INFINITE_MAX_PLIES = 60


class CorruptRecordError(ValueError):
    """A non-final store line failed to parse; names the byte offset."""


class GenerationError(ValueError):
    """A corpus template cannot produce a valid game."""


def _drop_partial_final_line(path: Path) -> None:
    """Truncate a torn final record (crash mid-append) before writing more."""
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        keep = data.rfind(b"\n") + 1
        warnings.warn(f"{path}: dropping partial final record at byte {keep}")
        with open(path, "r+b") as fh:
            fh.truncate(keep)


def write_records(path: str | Path, records: Iterable[dict], kind: str,
                  append: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    exists = append and path.exists() and path.stat().st_size > 0
    if exists:
        _drop_partial_final_line(path)
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        if not exists:
            header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "kind": kind}
            fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
            fh.flush()


def append_record(path: str | Path, record: dict, kind: str) -> None:
    write_records(path, [record], kind, append=True)


def read_records(path: str | Path, kind: str | None = None) -> list[dict]:
    """Load every complete record; skip a torn final line with a warning."""
    path = Path(path)
    data = path.read_bytes()
    records: list[dict] = []
    offset = 0
    lines = data.split(b"\n")
    for i, line in enumerate(lines):
        is_final_segment = i == len(lines) - 1
        if is_final_segment:
            if line:
                # no trailing newline: the writer died mid-record
                warnings.warn(f"{path}: ignoring partial final record at byte {offset}")
            break
        if not line.strip():
            offset += len(line) + 1
            continue
        try:
            rec = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptRecordError(f"{path}: corrupt record at byte {offset}: {exc}") from exc
        offset += len(line) + 1
        if rec.get("format") == FORMAT_NAME:
            if kind is not None and rec.get("kind") != kind:
                raise CorruptRecordError(
                    f"{path}: store holds {rec.get('kind')!r} records, expected {kind!r}"
                )
            continue
        records.append(rec)
    return records


def write_corpus(path: str | Path, specs: Iterable[GameSpec]) -> None:
    write_records(path, (spec_to_record(s) for s in specs), kind="corpus")


def read_corpus(path: str | Path) -> list[GameSpec]:
    return [spec_from_record(r) for r in read_records(path, kind="corpus")]


def write_samples(path: str | Path, samples: Iterable[JudgmentSample | FailureRecord],
                  append: bool = False) -> None:
    from .records import failure_to_record, sample_to_record

    recs = (
        failure_to_record(s) if isinstance(s, FailureRecord) else sample_to_record(s)
        for s in samples
    )
    write_records(path, recs, kind="samples", append=append)


def read_samples(path: str | Path) -> list[JudgmentSample | FailureRecord]:
    return [sample_from_record(r) for r in read_records(path, kind="samples")]


# --- corpus generation ---------------------------------------------------------

@dataclass(frozen=True)
class CategoryTemplate:
    """Sampling ranges for one game category.

    ``shape`` is square / rectangle / infinite; dims are sampled in
    ``dim_range`` and k in ``k_range`` (clamped to the board's longer
    side when the category needs a winnable line).
    """

    category: str
    shape: str  # "square" | "rectangle" | "infinite"
    dim_range: tuple[int, int] = (3, 10)
    k_range: tuple[int, int] = (2, 10)
    line_rule_p1: LineRule = LineRule.ALL
    line_rule_p2: LineRule = LineRule.ALL
    completion_effect: CompletionEffect = CompletionEffect.WIN
    opening_p1_range: tuple[int, int] = (1, 1)
    opening_p2_range: tuple[int, int] = (1, 1)
    p2_k_offset: int = 0  # -1 for the "second player needs k-1" family


DEFAULT_TEMPLATES: dict[str, CategoryTemplate] = {
    "K in a Row (Square)": CategoryTemplate("K in a Row (Square)", "square"),
    "K in a Row (Rectangle)": CategoryTemplate("K in a Row (Rectangle)", "rectangle"),
    "Infinite Board": CategoryTemplate("Infinite Board", "infinite", k_range=(3, 10)),
    "K in a Row Loses": CategoryTemplate(
        "K in a Row Loses", "square", completion_effect=CompletionEffect.LOSE
    ),
    "No Diagonal Win Allowed": CategoryTemplate(
        "No Diagonal Win Allowed", "square",
        line_rule_p1=LineRule.NO_DIAGONAL, line_rule_p2=LineRule.NO_DIAGONAL,
    ),
    "Only Diagonal Win Allowed": CategoryTemplate(
        "Only Diagonal Win Allowed", "square",
        line_rule_p1=LineRule.ONLY_DIAGONAL, line_rule_p2=LineRule.ONLY_DIAGONAL,
    ),
    "First Player Moves 2 pieces": CategoryTemplate(
        "First Player Moves 2 pieces", "square", opening_p1_range=(2, 2)
    ),
    "Second Player Moves 2 Pieces": CategoryTemplate(
        "Second Player Moves 2 Pieces", "square", opening_p2_range=(2, 2)
    ),
    "First Player Handicap (P1 no diag)": CategoryTemplate(
        "First Player Handicap (P1 no diag)", "square", line_rule_p1=LineRule.NO_DIAGONAL
    ),
    "First Player Handicap (P1 only diag)": CategoryTemplate(
        "First Player Handicap (P1 only diag)", "square", line_rule_p1=LineRule.ONLY_DIAGONAL
    ),
    "Second Player K-1 to Win": CategoryTemplate(
        "Second Player K-1 to Win", "square", k_range=(3, 10), p2_k_offset=-1
    ),
}


def example_games() -> list[GameSpec]:
    """The eleven per-category example games plus base Tic-Tac-Toe."""
    c = CATEGORIES
    return [
        tic_tac_toe(),
        GameSpec(Finite(10, 10), 7, 7, game_id="square-10x10-k7", category=c[0]),
        GameSpec(Finite(4, 9), 4, 4, game_id="rect-4x9-k4", category=c[1]),
        GameSpec(Infinite(), 5, 5, max_plies=INFINITE_MAX_PLIES,
                 game_id="infinite-k5", category=c[2]),
        GameSpec(Finite(4, 4), 3, 3, completion_effect=CompletionEffect.LOSE,
                 game_id="loses-4x4-k3", category=c[3]),
        GameSpec(Finite(10, 10), 4, 4, line_rule_p1=LineRule.NO_DIAGONAL,
                 line_rule_p2=LineRule.NO_DIAGONAL,
                 game_id="nodiag-10x10-k4", category=c[4]),
        GameSpec(Finite(5, 5), 4, 4, line_rule_p1=LineRule.ONLY_DIAGONAL,
                 line_rule_p2=LineRule.ONLY_DIAGONAL,
                 game_id="onlydiag-5x5-k4", category=c[5]),
        GameSpec(Finite(3, 3), 3, 3, opening_placements_p1=2,
                 game_id="p1-moves2-3x3-k3", category=c[6]),
        GameSpec(Finite(10, 10), 10, 10, opening_placements_p2=2,
                 game_id="p2-moves2-10x10-k10", category=c[7]),
        GameSpec(Finite(3, 3), 3, 3, line_rule_p1=LineRule.NO_DIAGONAL,
                 game_id="p1-nodiag-3x3-k3", category=c[8]),
        GameSpec(Finite(7, 7), 4, 4, line_rule_p1=LineRule.ONLY_DIAGONAL,
                 game_id="p1-onlydiag-7x7-k4", category=c[9]),
        GameSpec(Finite(5, 5), 3, 2, game_id="p2-needs2-5x5", category=c[10]),
    ]


def _sample_spec(template: CategoryTemplate, rng: np.random.Generator, seq: int) -> GameSpec:
    lo_d, hi_d = template.dim_range
    lo_k, hi_k = template.k_range
    if template.shape == "infinite":
        board: Finite | Infinite = Infinite()
        max_dim = None
    elif template.shape == "rectangle":
        rows = int(rng.integers(lo_d, hi_d + 1))
        cols = int(rng.integers(lo_d, hi_d + 1))
        if rows == cols:
            cols = cols + 1 if cols < hi_d else cols - 1
        board = Finite(rows, cols)
        max_dim = max(rows, cols)
    else:
        n = int(rng.integers(lo_d, hi_d + 1))
        board = Finite(n, n)
        max_dim = n
    k_hi = hi_k if max_dim is None else min(hi_k, max_dim)
    k_lo = lo_k if template.p2_k_offset == 0 else max(lo_k, 2 - template.p2_k_offset)
    if k_lo > k_hi:
        raise GenerationError(
            f"{template.category}: no winnable k in [{lo_k}, {hi_k}] fits the board"
        )
    k1 = int(rng.integers(k_lo, k_hi + 1))
    k2 = k1 + template.p2_k_offset
    slug = template.category.lower().replace(" ", "-").replace("(", "").replace(")", "")
    return GameSpec(
        board=board,
        k_p1=k1,
        k_p2=k2,
        line_rule_p1=template.line_rule_p1,
        line_rule_p2=template.line_rule_p2,
        completion_effect=template.completion_effect,
        opening_placements_p1=int(rng.integers(template.opening_p1_range[0],
                                               template.opening_p1_range[1] + 1)),
        opening_placements_p2=int(rng.integers(template.opening_p2_range[0],
                                               template.opening_p2_range[1] + 1)),
        max_plies=INFINITE_MAX_PLIES if template.shape == "infinite" else None,
        game_id=f"{slug}-{seq:03d}",
        category=template.category,
    )


def generate_corpus(
    count_per_category: int = 10,
    seed: int = 0,
    categories: Iterable[str] | None = None,
    templates: dict[str, CategoryTemplate] | None = None,
) -> list[GameSpec]:
    """Sample a deterministic corpus across the game categories.

    Always includes the eleven literal example games plus base
    Tic-Tac-Toe, then fills each requested category up to
    ``count_per_category`` rule-distinct specs.
    """
    if count_per_category < 1:
        raise GenerationError("count_per_category must be >= 1")
    templates = dict(DEFAULT_TEMPLATES if templates is None else templates)
    wanted = list(categories) if categories is not None else list(CATEGORIES)
    for cat in wanted:
        if cat not in templates:
            raise GenerationError(f"unknown category {cat!r}")
    rng = np.random.default_rng(seed)
    corpus: list[GameSpec] = []
    seen: set[tuple] = set()
    for spec in example_games():
        if spec.category in wanted or spec.game_id == "tic-tac-toe":
            corpus.append(spec)
            seen.add(spec.rule_key())
    for cat in wanted:
        template = templates[cat]
        have = sum(1 for s in corpus if s.category == cat)
        attempts = 0
        while have < count_per_category:
            attempts += 1
            if attempts > 200 * count_per_category:
                raise GenerationError(
                    f"{cat}: could not draw {count_per_category} distinct specs"
                )
            spec = _sample_spec(template, rng, seq=have)
            if spec.rule_key() in seen:
                continue
            seen.add(spec.rule_key())
            corpus.append(spec)
            have += 1
    return corpus


# --- human judgment ingestion ---------------------------------------------------

@dataclass
class IngestReport:
    samples: list[JudgmentSample]
    rejected: list[dict] = field(default_factory=list)
    per_game_counts: dict[str, int] = field(default_factory=dict)


def ingest_human_judgments(path: str | Path, query: Query,
                           known_game_ids: Iterable[str]) -> IngestReport:
    """Load participant judgments from a delimited file.

    Payoff files carry participant_id, game_id, q1, q2; funness files
    carry participant_id, game_id, rating. Bad rows (unknown game,
    out-of-range or unparseable values) are rejected row by row with
    reasons; the ingest continues.
    """
    known = set(known_game_ids)
    report = IngestReport(samples=[])
    rollout_counter: dict[tuple[str, str], int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for line_no, row in enumerate(reader, start=2):
            game_id = (row.get("game_id") or "").strip()
            participant = (row.get("participant_id") or "").strip()
            reasons = []
            if game_id not in known:
                reasons.append(f"unknown game_id {game_id!r}")

            def grab(col: str) -> float | None:
                rawv = (row.get(col) or "").strip()
                try:
                    v = float(rawv)
                except ValueError:
                    reasons.append(f"{col} not a number: {rawv!r}")
                    return None
                if not 0 <= v <= 100:
                    reasons.append(f"{col} out of range: {v}")
                    return None
                return v

            if query is Query.PAYOFF:
                q1, q2 = grab("q1"), grab("q2")
            else:
                rating = grab("rating")
            if reasons:
                report.rejected.append({"line": line_no, "reasons": reasons})
                continue
            evaluator_id = f"human:{participant}"
            key = (evaluator_id, game_id)
            idx = rollout_counter.get(key, 0)
            rollout_counter[key] = idx + 1
            if query is Query.PAYOFF:
                sample = JudgmentSample.from_payoff_answers(
                    evaluator_id, game_id, idx, q1, q2
                )
            else:
                sample = JudgmentSample(
                    evaluator_id=evaluator_id,
                    game_id=game_id,
                    query=Query.FUNNESS,
                    rollout_index=idx,
                    funness=rating,
                )
            report.samples.append(sample)
            report.per_game_counts[game_id] = report.per_game_counts.get(game_id, 0) + 1
    return report
