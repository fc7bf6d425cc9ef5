"""Acceptance criteria, one test per criterion.

Each test enforces its stated tolerance and runtime budget; the terminal
summary prints one pass/fail line per criterion (see conftest).
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from gameval.agents import AgentConfig, AgentKind, agent_payoff_estimate
from gameval.cli import EXIT_OK, main
from gameval.games import Finite, GameSpec
from gameval.gateway import (
    Gateway,
    ProviderConfig,
    ScriptedTransport,
    StubJudgeTransport,
    apply_direct_filter,
    code_records,
    aggregate_codes,
    parse_response,
)
from gameval.harness import LlmEvaluator, run_evaluator
from gameval.metrics import (
    accuracy_within,
    bootstrap_ci,
    combine_payoff,
    r_squared,
    wasserstein_binned,
)
from gameval.prompts import PromptMode, Query, build_prompt
from gameval.records import CODE_LABELS, TraceRecord
from gameval.solver import estimate_via_mcts, solve_exact
from gameval.store import generate_corpus, read_samples, write_corpus

from conftest import oracle_game_value
from suite import acceptance_suite

ACCEPTANCE_LABELS = {
    "test_criterion_1_exact_solver_oracle_suite": (
        1, "pruned/memoized exact solver matches the exhaustive oracle on the suite"),
    "test_criterion_2_mcts_exact_agreement": (
        2, "converged MCTS estimates match exact values on >= 95% of specs"),
    "test_criterion_3_agent_ordering": (
        3, "agent deviation ordering Expert <= Intuitive <= Random, Expert <= 0.15"),
    "test_criterion_4_payoff_formula": (
        4, "payoff combination satisfies range/monotonicity/draw identity and spot value"),
    "test_criterion_5_metric_identities": (
        5, "metric identities and 95% +/- 2% bootstrap coverage"),
    "test_criterion_6_prompt_parse_goldens": (
        6, "prompts byte-match fixtures; parser and Direct filter behave per protocol"),
    "test_criterion_7_end_to_end_offline_run": (
        7, "12 games x stub x 20 rollouts -> 240 records, resumable, tables complete"),
    "test_criterion_8_trace_coding": (
        8, "stub-coded aggregation reproduces synthetic rates; 8-label set exact"),
}

SUITE = acceptance_suite()
_EXACT_CACHE: dict[str, int] = {}


def exact_values() -> dict[str, int]:
    if not _EXACT_CACHE:
        for spec in SUITE:
            _EXACT_CACHE[spec.game_id] = solve_exact(spec)
    return _EXACT_CACHE


def test_criterion_1_exact_solver_oracle_suite():
    t0 = time.time()
    assert len(SUITE) >= 200
    categories = {s.category for s in SUITE}
    assert len(categories) == 10  # every finite category; infinite boards
    # cannot satisfy the <= 16 cell bound and are exercised elsewhere
    assert all(s.board.rows * s.board.cols <= 16 for s in SUITE)

    values = exact_values()
    for spec in SUITE:
        assert values[spec.game_id] == oracle_game_value(spec), spec.game_id
    assert values["sq-3x3-k3"] == 0
    assert values["sq-2x2-k2"] == 1
    elapsed = time.time() - t0
    assert elapsed < 300, f"criterion 1 runtime {elapsed:.0f}s exceeds 5 min"


def test_criterion_2_mcts_exact_agreement():
    t0 = time.time()
    values = exact_values()
    converged = matched = 0
    mismatches = []
    for spec in SUITE:
        est = estimate_via_mcts(
            spec, iterations=150_000, epsilon=0.05, exploration=0.8, seed=7
        )
        if est is None:
            continue
        converged += 1
        if est == values[spec.game_id]:
            matched += 1
        else:
            mismatches.append((spec.game_id, values[spec.game_id], est))
    agreement = matched / converged
    print(
        f"\nMCTS convergence: {converged}/{len(SUITE)} specs; "
        f"agreement among converged: {agreement:.3f}; mismatches: {mismatches}"
    )
    assert converged >= len(SUITE) // 2, "too few converged estimates to be meaningful"
    assert agreement >= 0.95, f"agreement {agreement:.3f} below 0.95: {mismatches}"
    elapsed = time.time() - t0
    assert elapsed < 1800, f"criterion 2 runtime {elapsed:.0f}s exceeds 30 min"


def test_criterion_3_agent_ordering():
    values = exact_values()
    deviations = {}
    for kind, n_games in (
        (AgentKind.EXPERT, 1),        # deterministic: one game suffices
        (AgentKind.INTUITIVE, 100),
        (AgentKind.RANDOM, 200),
    ):
        config = AgentConfig(kind, expert_depth=5)
        devs = [
            abs(
                agent_payoff_estimate(spec, config, config, n_games=n_games, seed=17)
                .payoff_mean
                - values[spec.game_id]
            )
            for spec in SUITE
        ]
        deviations[kind] = float(np.mean(devs))
    print(f"\nmean |payoff - optimal|: {deviations}")
    assert deviations[AgentKind.EXPERT] <= deviations[AgentKind.INTUITIVE]
    assert deviations[AgentKind.INTUITIVE] <= deviations[AgentKind.RANDOM]
    assert deviations[AgentKind.EXPERT] <= 0.15


def test_criterion_4_payoff_formula():
    grid = list(range(0, 101, 5))
    for q2 in grid:
        previous = None
        for q1 in grid:
            payoff = combine_payoff(q1, q2)
            assert -1.0 <= payoff <= 1.0
            if previous is not None:
                assert payoff >= previous - 1e-12
            previous = payoff
    for q1 in grid:
        assert combine_payoff(q1, 100) == pytest.approx(0.0)
    assert combine_payoff(60, 50) == pytest.approx(0.10)


def test_criterion_5_metric_identities():
    rng = np.random.default_rng(123)
    x = rng.normal(size=40)
    assert r_squared(x, x) == pytest.approx(1.0)
    assert r_squared(x, 3.0 * x - 2.0) == pytest.approx(1.0)

    # Wasserstein metric axioms on random triples
    for _ in range(1000):
        a, b, c = (rng.uniform(-1, 1, size=rng.integers(5, 25)) for _ in range(3))
        dab = wasserstein_binned(a, b, (-1, 1))
        dba = wasserstein_binned(b, a, (-1, 1))
        dbc = wasserstein_binned(b, c, (-1, 1))
        dac = wasserstein_binned(a, c, (-1, 1))
        assert dab == pytest.approx(dba)
        assert dac <= dab + dbc + 1e-12
        assert wasserstein_binned(a, a, (-1, 1)) == 0.0

    # accuracy threshold semantics: strictly within 0.5 of the optimum
    assert accuracy_within([0.49, 0.5, -0.49], [0, 0, 0]) == pytest.approx(2 / 3)

    # bootstrap coverage on synthetic per-game Gaussians
    true_mean = 0.3
    hits = 0
    n_sims, n_games = 1000, 100
    for sim in range(n_sims):
        sim_rng = np.random.default_rng(10_000 + sim)
        data = sim_rng.normal(true_mean, 1.0, size=n_games)
        groups = {f"g{i}": data[i : i + 1] for i in range(n_games)}
        ci = bootstrap_ci(
            groups,
            lambda gs: float(np.mean([v[0] for v in gs.values()])),
            n_boot=500,
            seed=sim,
            unit="games",
        )
        hits += ci.low <= true_mean <= ci.high
    coverage = hits / n_sims
    print(f"\nbootstrap coverage: {coverage:.3f}")
    assert 0.93 <= coverage <= 0.97


def test_criterion_6_prompt_parse_goldens():
    from pathlib import Path

    fixtures = Path(__file__).parent / "fixtures"
    spec = GameSpec(Finite(3, 5), 3, 3)
    system, user = build_prompt(spec, Query.PAYOFF, PromptMode.COT)
    assert system == (fixtures / "payoff_system.txt").read_text()
    assert user == (fixtures / "payoff_user_cot_3x5.txt").read_text()

    from gameval.games import LineRule

    fun_spec = GameSpec(Finite(7, 7), 4, 4, line_rule_p1=LineRule.ONLY_DIAGONAL)
    system, user = build_prompt(fun_spec, Query.FUNNESS, PromptMode.COT)
    assert system == (fixtures / "funness_system.txt").read_text()
    assert user == (fixtures / "funness_user_cot_7x7.txt").read_text()

    parsed = parse_response(
        "Scratchpad thoughts...\nRESPONSE-Q1 = 70 and RESPONSE-Q2 = 30", Query.PAYOFF
    )
    assert parsed.ok and (parsed.q1, parsed.q2) == (70.0, 30.0)
    assert parse_response("**RESPONSE = 30**", Query.FUNNESS).funness == 30.0

    prosy = TraceRecord(
        evaluator_id="m", game_id="g", query=Query.PAYOFF, rollout_index=0,
        raw_text="Let me first reason about the geometry of this wide board. "
                 "RESPONSE-Q1 = 55 and RESPONSE-Q2 = 20",
        parse_status="ok", q1=55.0, q2=20.0,
    )
    assert apply_direct_filter(prosy).parse_status == "filtered"
    bare = TraceRecord(
        evaluator_id="m", game_id="g", query=Query.PAYOFF, rollout_index=0,
        raw_text="RESPONSE-Q1 = 55 and RESPONSE-Q2 = 20",
        parse_status="ok", q1=55.0, q2=20.0,
    )
    assert apply_direct_filter(bare).parse_status == "ok"


def test_criterion_7_end_to_end_offline_run(tmp_path, capsys):
    t0 = time.time()
    corpus = generate_corpus(count_per_category=1, seed=0)
    assert len(corpus) == 12
    corpus_path = tmp_path / "corpus.jsonl"
    write_corpus(corpus_path, corpus)
    run_dir = tmp_path / "run"
    provider = ProviderConfig(provider_id="stub", model_name="stub-judge")

    first = run_evaluator(
        corpus,
        LlmEvaluator("stub:judge", provider, Gateway(StubJudgeTransport(seed=11))),
        Query.PAYOFF, rollouts=9, run_dir=run_dir, parallelism=1,
    )
    assert first.new_calls == 12 * 9  # stub judgments always parse: one call each

    resume_transport = StubJudgeTransport(seed=11)
    second = run_evaluator(
        corpus,
        LlmEvaluator("stub:judge", provider, Gateway(resume_transport)),
        Query.PAYOFF, rollouts=20, run_dir=run_dir, parallelism=1,
    )
    assert second.skipped == 12 * 9
    assert second.new_calls == 12 * 11  # only the missing rollouts hit the gateway
    assert len(second.samples) + len(second.failures) == 12 * 11

    persisted = read_samples(run_dir / "samples.jsonl")
    assert len(persisted) == 240  # samples or failure records, exactly
    keys = {(s.game_id, s.rollout_index) for s in persisted}
    assert len(keys) == 240  # zero duplicates after resume

    third_transport = StubJudgeTransport(seed=11)
    third = run_evaluator(
        corpus,
        LlmEvaluator("stub:judge", provider, Gateway(third_transport)),
        Query.PAYOFF, rollouts=20, run_dir=run_dir, parallelism=1,
    )
    assert third.new_calls == 0 and third_transport.calls == 0

    other_dir = tmp_path / "other"
    assert main([
        "llm-run", "--corpus", str(corpus_path), "--run-dir", str(other_dir),
        "--provider-id", "stub", "--model", "other-judge",
        "--rollouts", "20", "--parallelism", "4", "--seed", "99",
    ]) == EXIT_OK

    assert main([
        "compare", "--a", str(run_dir / "samples.jsonl"),
        "--reference", str(other_dir / "samples.jsonl"),
        "--metric", "wasserstein", "--n-boot", "300",
        "--corpus", str(corpus_path), "--by-category",
    ]) == EXIT_OK
    table = capsys.readouterr().out.strip().splitlines()
    assert table[0].split("\t") == [
        "comparison_id", "metric", "grouping", "value", "ci_low", "ci_high",
        "n_games", "parameters",
    ]
    assert len(table) >= 2 and all(len(r.split("\t")) == 8 for r in table[1:])

    assert main([
        "report", "--samples", str(run_dir / "samples.jsonl"),
        "--corpus", str(corpus_path), "--group-by", "category",
    ]) == EXIT_OK
    report_table = capsys.readouterr().out.strip().splitlines()
    assert len(report_table) == 1 + 11  # header + one row per category

    assert main([
        "report", "--tokens", "--traces", str(run_dir / "traces.jsonl"),
        "--corpus", str(corpus_path), "--group-by", "traits",
    ]) == EXIT_OK
    tokens_table = capsys.readouterr().out.strip().splitlines()
    assert len(tokens_table) >= 2

    elapsed = time.time() - t0
    assert elapsed < 60, f"criterion 7 runtime {elapsed:.0f}s exceeds 1 min"


def test_criterion_8_trace_coding():
    assert set(CODE_LABELS) == {
        "ExplicitSimulation", "AnalogicalReasoning", "MathematicalComputation",
        "Balance", "Challenge", "Length", "StrategicRichness", "Novelty",
    }
    assert len(CODE_LABELS) == 8

    def make(game, query, i):
        return TraceRecord(
            evaluator_id="m", game_id=game, query=query, rollout_index=i,
            raw_text="x", trace_text=f"trace {game} {query.value} {i}",
        )

    records = (
        [make("g1", Query.PAYOFF, i) for i in range(4)]
        + [make("g1", Query.FUNNESS, i) for i in range(2)]
        + [make("g2", Query.PAYOFF, i) for i in range(2)]
    )
    # scripted coder: g1 payoff YES,YES,NO,NO; g1 funness YES,NO; g2 payoff NO,NO
    script = ["YES", "YES", "NO", "NO", "YES", "NO", "NO", "NO"]
    gw = Gateway(ScriptedTransport(list(script)))
    coder = ProviderConfig(provider_id="coder", model_name="stub-coder")
    failures = code_records(gw, coder, records, labels=["ExplicitSimulation"])
    assert failures == []

    rows = aggregate_codes(records, by="game")
    by_game = {r.group: r for r in rows}
    assert by_game["g1"].payoff_rate == pytest.approx(0.5)
    assert by_game["g1"].funness_rate == pytest.approx(0.5)
    assert by_game["g1"].n_payoff == 4 and by_game["g1"].n_funness == 2
    assert by_game["g2"].payoff_rate == 0.0

    (model_row,) = [r for r in aggregate_codes(records, by="model")]
    assert model_row.payoff_rate == pytest.approx(2 / 6)

    cats = {"g1": "K in a Row (Square)", "g2": "K in a Row Loses"}
    cat_rows = aggregate_codes(records, by="category", game_categories=cats)
    assert {r.group for r in cat_rows} == set(cats.values())
