"""Batch-engine contracts: cardinality, resume, retry, accounting."""

from __future__ import annotations

import pytest

from gameval.agents import AgentConfig, AgentKind
from gameval.games import Finite, GameSpec, tic_tac_toe
from gameval.gateway import (
    Gateway,
    ProviderConfig,
    ProviderError,
    RawCompletion,
    ScriptedTransport,
    StubJudgeTransport,
)
from gameval.harness import (
    AgentPairEvaluator,
    ConfigError,
    LlmEvaluator,
    run_evaluator,
)
from gameval.prompts import PromptMode, Query
from gameval.store import read_samples

GOOD = "RESPONSE-Q1 = 60 and RESPONSE-Q2 = 50"


def small_corpus(n: int = 2) -> list[GameSpec]:
    base = tic_tac_toe()
    extras = [
        GameSpec(Finite(3, 5), 3, 3, game_id="rect-3x5", category="K in a Row (Rectangle)"),
        GameSpec(Finite(4, 4), 3, 3, game_id="sq-4x4", category="K in a Row (Square)"),
    ]
    return ([base] + extras)[:n]


def llm_evaluator(transport, mode: PromptMode = PromptMode.COT) -> LlmEvaluator:
    provider = ProviderConfig(provider_id="test", model_name="judge", prompt_mode=mode)
    return LlmEvaluator("test:judge", provider, Gateway(transport, sleep=lambda _s: None))


class TestAgentPath:
    def test_per_game_payoff_samples(self):
        corpus = small_corpus(1)
        evaluator = AgentPairEvaluator(
            "agent:r", AgentConfig(AgentKind.RANDOM), AgentConfig(AgentKind.RANDOM), n_games=5
        )
        result = run_evaluator(corpus, evaluator, Query.PAYOFF, seed=1)
        assert len(result.samples) == 5
        assert all(s.payoff in (-1.0, 0.0, 1.0) for s in result.samples)
        assert all(s.q1_win_given_not_draw is None for s in result.samples)

    def test_funness_query_rejected(self):
        evaluator = AgentPairEvaluator(
            "agent:r", AgentConfig(AgentKind.RANDOM), AgentConfig(AgentKind.RANDOM), n_games=2
        )
        with pytest.raises(ConfigError):
            run_evaluator(small_corpus(1), evaluator, Query.FUNNESS)

    def test_agent_runs_resume_by_game(self, tmp_path):
        corpus = small_corpus(2)
        evaluator = AgentPairEvaluator(
            "agent:r", AgentConfig(AgentKind.RANDOM), AgentConfig(AgentKind.RANDOM), n_games=3
        )
        first = run_evaluator(corpus, evaluator, Query.PAYOFF, seed=1, run_dir=tmp_path)
        assert len(first.samples) == 6
        second = run_evaluator(corpus, evaluator, Query.PAYOFF, seed=1, run_dir=tmp_path)
        assert second.samples == [] and second.skipped == 2

    def test_seed_determinism(self):
        corpus = small_corpus(1)
        evaluator = AgentPairEvaluator(
            "agent:r", AgentConfig(AgentKind.RANDOM), AgentConfig(AgentKind.RANDOM), n_games=10
        )
        a = run_evaluator(corpus, evaluator, Query.PAYOFF, seed=5)
        b = run_evaluator(corpus, evaluator, Query.PAYOFF, seed=5)
        assert [s.payoff for s in a.samples] == [s.payoff for s in b.samples]


class TestLlmPath:
    def test_cardinality_two_games_twenty_rollouts(self, tmp_path):
        corpus = small_corpus(2)
        evaluator = llm_evaluator(StubJudgeTransport(seed=0))
        result = run_evaluator(
            corpus, evaluator, Query.PAYOFF, rollouts=20, run_dir=tmp_path, parallelism=1
        )
        assert len(result.samples) + len(result.failures) == 40
        persisted = read_samples(tmp_path / "samples.jsonl")
        assert len(persisted) == 40

    def test_derived_payoff_matches_formula(self):
        transport = ScriptedTransport([GOOD])
        result = run_evaluator(small_corpus(1), llm_evaluator(transport), Query.PAYOFF,
                               rollouts=1, parallelism=1)
        (sample,) = result.samples
        assert sample.payoff == pytest.approx(0.10)

    def test_parse_failure_retried_once_same_prompt(self):
        transport = ScriptedTransport(["no idea what you mean", GOOD])
        result = run_evaluator(small_corpus(1), llm_evaluator(transport), Query.PAYOFF,
                               rollouts=1, parallelism=1)
        assert len(result.samples) == 1
        assert result.new_calls == 2
        assert transport.calls[0] == transport.calls[1]

    def test_double_parse_failure_recorded(self):
        transport = ScriptedTransport(["???", "still nothing"])
        result = run_evaluator(small_corpus(1), llm_evaluator(transport), Query.PAYOFF,
                               rollouts=1, parallelism=1)
        (failure,) = result.failures
        assert failure.reason == "missing_marker"
        assert result.new_calls == 2

    def test_truncation_fails_without_retry(self):
        transport = ScriptedTransport([RawCompletion(text="RESP", truncated=True), GOOD])
        result = run_evaluator(small_corpus(1), llm_evaluator(transport), Query.PAYOFF,
                               rollouts=1, parallelism=1)
        (failure,) = result.failures
        assert failure.reason == "truncated"
        assert result.new_calls == 1

    def test_provider_exhaustion_is_per_rollout_failure(self):
        transport = ScriptedTransport([ProviderError("boom"), GOOD])
        result = run_evaluator(small_corpus(1), llm_evaluator(transport), Query.PAYOFF,
                               rollouts=2, parallelism=1)
        assert len(result.samples) == 1 and len(result.failures) == 1
        assert "boom" in result.failures[0].reason

    def test_direct_mode_filter_records_failure(self):
        prose = "Let me reason at length about the geometry of the board first. "
        transport = ScriptedTransport([prose + GOOD, GOOD])
        result = run_evaluator(
            small_corpus(1), llm_evaluator(transport, PromptMode.DIRECT), Query.PAYOFF,
            rollouts=2, parallelism=1,
        )
        reasons = sorted(f.reason for f in result.failures)
        assert reasons == ["filtered"]
        assert len(result.samples) == 1

    def test_funness_query_samples(self):
        transport = ScriptedTransport(["RESPONSE = 62"] )
        result = run_evaluator(small_corpus(1), llm_evaluator(transport), Query.FUNNESS,
                               rollouts=1, parallelism=1)
        assert result.samples[0].funness == 62.0

    def test_resume_issues_only_missing_calls(self, tmp_path):
        evaluator_fresh = llm_evaluator(StubJudgeTransport(seed=1))
        first = run_evaluator(
            small_corpus(1), evaluator_fresh, Query.PAYOFF,
            rollouts=20, run_dir=tmp_path, parallelism=1,
        )
        assert first.new_calls == 20
        evaluator_resume = llm_evaluator(StubJudgeTransport(seed=1))
        second = run_evaluator(
            small_corpus(2), evaluator_resume, Query.PAYOFF,
            rollouts=20, run_dir=tmp_path, parallelism=1,
        )
        assert second.skipped == 20
        assert second.new_calls == 20  # only the new game's rollouts
        persisted = read_samples(tmp_path / "samples.jsonl")
        assert len(persisted) == 40

    def test_completed_run_is_idempotent(self, tmp_path):
        corpus = small_corpus(2)
        run_evaluator(corpus, llm_evaluator(StubJudgeTransport(seed=2)), Query.PAYOFF,
                      rollouts=5, run_dir=tmp_path, parallelism=1)
        transport = StubJudgeTransport(seed=2)
        again = run_evaluator(corpus, llm_evaluator(transport), Query.PAYOFF,
                              rollouts=5, run_dir=tmp_path, parallelism=1)
        assert transport.calls == 0
        assert again.new_calls == 0 and again.skipped == 10

    def test_parallel_run_accounts_for_every_rollout(self, tmp_path):
        corpus = small_corpus(3)
        result = run_evaluator(
            corpus, llm_evaluator(StubJudgeTransport(seed=3)), Query.PAYOFF,
            rollouts=8, run_dir=tmp_path, parallelism=4,
        )
        assert len(result.samples) + len(result.failures) == 24
        persisted = read_samples(tmp_path / "samples.jsonl")
        assert len(persisted) == 24
        keys = {(s.game_id, s.rollout_index) for s in persisted}
        assert len(keys) == 24

    def test_manifest_written(self, tmp_path):
        import json

        run_evaluator(small_corpus(1), llm_evaluator(StubJudgeTransport()), Query.PAYOFF,
                      rollouts=1, run_dir=tmp_path, parallelism=1)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["rollouts"] == 1
        assert manifest["provider"]["model_name"] == "judge"

    def test_empty_corpus_rejected(self):
        with pytest.raises(ConfigError):
            run_evaluator([], llm_evaluator(StubJudgeTransport()), Query.PAYOFF)
