"""Batch engine: run an evaluator over a corpus into a sample store.

Agent evaluators judge by simulated self-play; LLM evaluators go through
the gateway rollout by rollout. Runs persist append-only and resume:
already recorded (evaluator, game, rollout) triples are never re-issued.
"""

from __future__ import annotations

import json
import threading
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .agents import AgentConfig, agent_payoff_estimate
from .games import GameSpec
from .gateway import (
    Gateway,
    ProviderAuthError,
    ProviderConfig,
    ProviderError,
    apply_direct_filter,
    cot_rationale,
    parse_response,
)
from .prompts import PromptMode, Query, build_prompt
from .records import (
    FailureRecord,
    JudgmentSample,
    TraceRecord,
    failure_to_record,
    sample_to_record,
    trace_to_record,
)
from .store import append_record, read_records

DEFAULT_ROLLOUTS = 20
DEFAULT_PARALLELISM = 4


class ConfigError(ValueError):
    """Evaluator, query, or run configuration is inconsistent."""


@dataclass(frozen=True)
class AgentPairEvaluator:
    """Two agent configs whose head-to-head play evaluates each game."""

    evaluator_id: str
    p1: AgentConfig
    p2: AgentConfig
    n_games: int = 1000


@dataclass
class LlmEvaluator:
    evaluator_id: str
    provider: ProviderConfig
    gateway: Gateway


@dataclass
class RunResult:
    samples: list[JudgmentSample] = field(default_factory=list)
    failures: list[FailureRecord] = field(default_factory=list)
    traces: list[TraceRecord] = field(default_factory=list)
    new_calls: int = 0
    skipped: int = 0


class RunStore:
    """Append-only persistence for one run directory, with key tracking."""

    def __init__(self, run_dir: str | Path | None):
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self._lock = threading.Lock()
        self.existing: set[tuple] = set()
        if self.run_dir is not None and self.samples_path.exists():
            for rec in read_records(self.samples_path, kind="samples"):
                self.existing.add(
                    (rec["evaluator_id"], rec["game_id"], rec["query"], rec["rollout_index"])
                )

    @property
    def samples_path(self) -> Path:
        return self.run_dir / "samples.jsonl"

    @property
    def traces_path(self) -> Path:
        return self.run_dir / "traces.jsonl"

    def has(self, evaluator_id: str, game_id: str, query: Query, rollout: int) -> bool:
        return (evaluator_id, game_id, query.value, rollout) in self.existing

    def write(self, outcome: JudgmentSample | FailureRecord, trace: TraceRecord | None) -> None:
        if self.run_dir is None:
            return
        with self._lock:
            if isinstance(outcome, FailureRecord):
                append_record(self.samples_path, failure_to_record(outcome), kind="samples")
            else:
                append_record(self.samples_path, sample_to_record(outcome), kind="samples")
            if trace is not None:
                append_record(self.traces_path, trace_to_record(trace), kind="traces")
            self.existing.add(
                (outcome.evaluator_id, outcome.game_id, outcome.query.value,
                 outcome.rollout_index)
            )

    def write_manifest(self, manifest: dict) -> None:
        if self.run_dir is None:
            return
        self.run_dir.mkdir(parents=True, exist_ok=True)
        with open(self.run_dir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _game_seed(seed: int, game_id: str) -> int:
    return (seed * 0x9E3779B1 + zlib.crc32(game_id.encode())) % (2**31)


def _run_agent_pair(
    corpus: list[GameSpec],
    evaluator: AgentPairEvaluator,
    seed: int,
    store: RunStore,
) -> RunResult:
    result = RunResult()
    for spec in corpus:
        if store.has(evaluator.evaluator_id, spec.game_id, Query.PAYOFF, 0):
            result.skipped += 1
            continue
        est = agent_payoff_estimate(
            spec, evaluator.p1, evaluator.p2,
            n_games=evaluator.n_games, seed=_game_seed(seed, spec.game_id),
        )
        for i, payoff in enumerate(est.per_game_payoffs):
            sample = JudgmentSample(
                evaluator_id=evaluator.evaluator_id,
                game_id=spec.game_id,
                query=Query.PAYOFF,
                rollout_index=i,
                payoff=float(payoff),
            )
            store.write(sample, trace=None)
            result.samples.append(sample)
    return result


def _llm_rollout(
    evaluator: LlmEvaluator,
    spec: GameSpec,
    query: Query,
    rollout: int,
) -> tuple[JudgmentSample | FailureRecord, TraceRecord, int]:
    provider = evaluator.provider
    system_text, user_text = build_prompt(
        spec, query, provider.prompt_mode, inline_system=provider.r1_inline_system
    )
    calls = 0
    record = None
    for attempt in (1, 2):  # unparseable responses get one same-prompt retry
        try:
            completion = evaluator.gateway.complete(provider, system_text, user_text)
        except ProviderAuthError:
            raise
        except ProviderError as exc:
            calls += 1
            record = TraceRecord(
                evaluator_id=evaluator.evaluator_id,
                game_id=spec.game_id,
                query=query,
                rollout_index=rollout,
                raw_text="",
                parse_status="failed",
                failure_reason=f"provider: {exc}",
            )
            break
        calls += 1
        record = TraceRecord(
            evaluator_id=evaluator.evaluator_id,
            game_id=spec.game_id,
            query=query,
            rollout_index=rollout,
            raw_text=completion.text,
            trace_text=completion.trace_text,
            reasoning_tokens=completion.reasoning_tokens,
        )
        if completion.truncated:
            record.parse_status = "failed"
            record.failure_reason = "truncated"
            break
        parsed = parse_response(completion.text, query)
        if parsed.ok:
            record.parse_status = "ok"
            record.q1, record.q2, record.funness = parsed.q1, parsed.q2, parsed.funness
            if provider.prompt_mode is PromptMode.DIRECT:
                record = apply_direct_filter(record)
            elif record.trace_text is None:
                # CoT rationales are codeable traces too
                record.trace_text = cot_rationale(completion.text) or None
            break
        record.parse_status = "failed"
        record.failure_reason = parsed.reason

    if record.parse_status == "ok":
        if query is Query.PAYOFF:
            outcome: JudgmentSample | FailureRecord = JudgmentSample.from_payoff_answers(
                evaluator.evaluator_id, spec.game_id, rollout,
                record.q1, record.q2, reasoning_tokens=record.reasoning_tokens,
            )
        else:
            outcome = JudgmentSample(
                evaluator_id=evaluator.evaluator_id,
                game_id=spec.game_id,
                query=Query.FUNNESS,
                rollout_index=rollout,
                funness=record.funness,
                reasoning_tokens=record.reasoning_tokens,
            )
    else:
        outcome = FailureRecord(
            evaluator_id=evaluator.evaluator_id,
            game_id=spec.game_id,
            query=query,
            rollout_index=rollout,
            reason=record.failure_reason or record.parse_status,
        )
    return outcome, record, calls


def _run_llm(
    corpus: list[GameSpec],
    evaluator: LlmEvaluator,
    query: Query,
    rollouts: int,
    store: RunStore,
    parallelism: int,
) -> RunResult:
    result = RunResult()
    pending = []
    for spec in corpus:
        for rollout in range(rollouts):
            if store.has(evaluator.evaluator_id, spec.game_id, query, rollout):
                result.skipped += 1
            else:
                pending.append((spec, rollout))

    lock = threading.Lock()

    def work(item):
        spec, rollout = item
        outcome, trace, calls = _llm_rollout(evaluator, spec, query, rollout)
        store.write(outcome, trace)
        with lock:
            result.new_calls += calls
            result.traces.append(trace)
            if isinstance(outcome, FailureRecord):
                result.failures.append(outcome)
            else:
                result.samples.append(outcome)

    if parallelism <= 1:
        for item in pending:
            work(item)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(work, pending))

    order = {spec.game_id: i for i, spec in enumerate(corpus)}
    result.samples.sort(key=lambda s: (order[s.game_id], s.rollout_index))
    result.failures.sort(key=lambda f: (order[f.game_id], f.rollout_index))
    result.traces.sort(key=lambda t: (order[t.game_id], t.rollout_index))
    return result


def run_evaluator(
    corpus: list[GameSpec],
    evaluator: AgentPairEvaluator | LlmEvaluator,
    query: Query,
    rollouts: int = DEFAULT_ROLLOUTS,
    seed: int = 0,
    run_dir: str | Path | None = None,
    parallelism: int = DEFAULT_PARALLELISM,
    corpus_path: str | None = None,
) -> RunResult:
    """Collect judgment samples for every game in the corpus.

    Agent evaluators answer the payoff query only, and the ``rollouts``
    parameter is ignored in favor of their ``n_games`` aggregation (each
    simulated game becomes one sample). LLM evaluators are sampled
    ``rollouts`` times per game with per-rollout failure records, bounded
    parallelism, and resume-on-restart.
    """
    if not corpus:
        raise ConfigError("corpus must be non-empty")
    ids = [spec.game_id for spec in corpus]
    if len(set(ids)) != len(ids):
        raise ConfigError("corpus contains duplicate game ids")
    if isinstance(evaluator, AgentPairEvaluator) and query is not Query.PAYOFF:
        raise ConfigError("agent evaluators support the payoff query only")
    if rollouts < 1:
        raise ConfigError("rollouts must be >= 1")

    store = RunStore(run_dir)
    store.write_manifest(
        {
            "evaluator_id": evaluator.evaluator_id,
            "query": query.value,
            "rollouts": rollouts,
            "seed": seed,
            "parallelism": parallelism,
            "corpus_path": corpus_path,
            "n_games": evaluator.n_games if isinstance(evaluator, AgentPairEvaluator) else None,
            "provider": (
                {
                    "provider_id": evaluator.provider.provider_id,
                    "model_name": evaluator.provider.model_name,
                    "temperature": evaluator.provider.effective_temperature,
                    "max_tokens": evaluator.provider.max_tokens,
                    "reasoning_effort": evaluator.provider.reasoning_effort,
                    "prompt_mode": evaluator.provider.prompt_mode.value,
                }
                if isinstance(evaluator, LlmEvaluator)
                else None
            ),
        }
    )
    if isinstance(evaluator, AgentPairEvaluator):
        return _run_agent_pair(corpus, evaluator, seed, store)
    return _run_llm(corpus, evaluator, query, rollouts, store, parallelism)
