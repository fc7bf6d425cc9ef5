"""Record-file round-trips, crash safety, corpus generation, and ingest."""

from __future__ import annotations

import json

import pytest

from gameval.games import (
    CATEGORIES,
    CompletionEffect,
    Finite,
    GameSpec,
    Infinite,
    LineRule,
)
from gameval.prompts import Query
from gameval.records import (
    FailureRecord,
    JudgmentSample,
    TraceRecord,
    sample_from_record,
    sample_to_record,
    spec_from_record,
    spec_to_record,
    trace_from_record,
    trace_to_record,
)
from gameval.store import (
    CategoryTemplate,
    CorruptRecordError,
    GenerationError,
    generate_corpus,
    ingest_human_judgments,
    read_corpus,
    read_records,
    read_samples,
    write_corpus,
    write_records,
    write_samples,
)


class TestRoundTrips:
    def test_spec_round_trip(self):
        specs = [
            GameSpec(Finite(4, 9), 4, 4, game_id="a", category=CATEGORIES[1]),
            GameSpec(Infinite(), 5, 5, max_plies=60, game_id="b", category=CATEGORIES[2]),
            GameSpec(
                Finite(5, 5), 3, 2,
                line_rule_p1=LineRule.ONLY_DIAGONAL,
                completion_effect=CompletionEffect.LOSE,
                opening_placements_p2=2,
                game_id="c", category=CATEGORIES[3],
            ),
        ]
        for spec in specs:
            rec = json.loads(json.dumps(spec_to_record(spec)))
            assert spec_from_record(rec) == spec

    def test_sample_round_trip(self):
        samples = [
            JudgmentSample.from_payoff_answers("human:p7", "g", 3, 70, 30),
            JudgmentSample(
                evaluator_id="m", game_id="g", query=Query.FUNNESS,
                rollout_index=0, funness=55.0, reasoning_tokens=812,
            ),
            FailureRecord("m", "g", Query.PAYOFF, 4, "truncated"),
        ]
        for s in samples:
            if isinstance(s, FailureRecord):
                from gameval.records import failure_to_record

                rec = json.loads(json.dumps(failure_to_record(s)))
            else:
                rec = json.loads(json.dumps(sample_to_record(s)))
            assert sample_from_record(rec) == s

    def test_trace_round_trip(self):
        t = TraceRecord(
            evaluator_id="m", game_id="g", query=Query.FUNNESS, rollout_index=2,
            raw_text="RESPONSE = 30", trace_text="hmm", reasoning_tokens=100,
            parse_status="ok", funness=30.0,
            coder_labels={"Balance": True, "Novelty": False},
        )
        rec = json.loads(json.dumps(trace_to_record(t)))
        assert trace_from_record(rec) == t


class TestRecordFiles:
    def test_write_then_read_count(self, tmp_path):
        path = tmp_path / "r.jsonl"
        records = [{"type": "solve", "game_id": f"g{i}", "value": 0} for i in range(100)]
        write_records(path, records, kind="solves")
        assert read_records(path, kind="solves") == records

    def test_partial_final_record_skipped_with_warning(self, tmp_path):
        path = tmp_path / "r.jsonl"
        records = [{"i": i} for i in range(100)]
        write_records(path, records, kind="solves")
        data = path.read_bytes()
        path.write_bytes(data[:-7])  # tear the last record mid-write
        with pytest.warns(UserWarning, match="partial final record"):
            loaded = read_records(path, kind="solves")
        assert loaded == records[:99]

    def test_corrupt_middle_record_is_hard_error_with_offset(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_records(path, [{"i": 0}, {"i": 1}, {"i": 2}], kind="solves")
        lines = path.read_bytes().split(b"\n")
        offset = len(lines[0]) + 1 + len(lines[1]) + 1  # header + first record
        lines[2] = b'{"i": 1 CORRUPT'
        path.write_bytes(b"\n".join(lines))
        with pytest.raises(CorruptRecordError, match=f"byte {offset}"):
            read_records(path)

    def test_kind_mismatch_rejected(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_records(path, [{"i": 0}], kind="solves")
        with pytest.raises(CorruptRecordError, match="solves"):
            read_records(path, kind="corpus")

    def test_append_mode_keeps_single_header(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_records(path, [{"i": 0}], kind="solves", append=True)
        write_records(path, [{"i": 1}], kind="solves", append=True)
        assert read_records(path, kind="solves") == [{"i": 0}, {"i": 1}]
        headers = [
            line for line in path.read_text().splitlines() if "format" in line
        ]
        assert len(headers) == 1

    def test_documented_v1_format_loads(self, tmp_path):
        # A hand-written store in the documented format must load as-is.
        path = tmp_path / "v1.jsonl"
        path.write_text(
            '{"format": "gameval.records", "version": 1, "kind": "corpus"}\n'
            '{"type": "game_spec", "game_id": "ttt", "category": "K in a Row (Square)", '
            '"board": {"rows": 3, "cols": 3}, "k_p1": 3, "k_p2": 3, '
            '"line_rule_p1": "all", "line_rule_p2": "all", "completion_effect": "win", '
            '"opening_placements_p1": 1, "opening_placements_p2": 1, "max_plies": null}\n'
        )
        (spec,) = read_corpus(path)
        assert spec.game_id == "ttt" and spec.k_p1 == 3

    def test_corpus_store_round_trip(self, tmp_path):
        corpus = generate_corpus(count_per_category=2, seed=9)
        path = tmp_path / "corpus.jsonl"
        write_corpus(path, corpus)
        assert read_corpus(path) == corpus

    def test_samples_store_round_trip(self, tmp_path):
        samples = [
            JudgmentSample.from_payoff_answers("m", "g", i, 50 + i, 10) for i in range(4)
        ]
        path = tmp_path / "samples.jsonl"
        write_samples(path, samples)
        assert read_samples(path) == samples


class TestGenerateCorpus:
    def test_deterministic_given_seed(self):
        assert generate_corpus(count_per_category=5, seed=3) == generate_corpus(
            count_per_category=5, seed=3
        )
        assert generate_corpus(count_per_category=5, seed=3) != generate_corpus(
            count_per_category=5, seed=4
        )

    def test_literal_examples_always_present(self):
        corpus = generate_corpus(count_per_category=1, seed=0)
        ids = {s.game_id for s in corpus}
        assert "tic-tac-toe" in ids
        assert "loses-4x4-k3" in ids and "p2-needs2-5x5" in ids
        assert len(corpus) == 12  # 11 category examples + base game

    def test_categories_all_covered_with_valid_rules(self):
        corpus = generate_corpus(count_per_category=6, seed=1)
        by_cat = {}
        for spec in corpus:
            by_cat.setdefault(spec.category, []).append(spec)
        assert set(by_cat) == set(CATEGORIES)
        for spec in by_cat["Second Player K-1 to Win"]:
            assert spec.k_p2 == spec.k_p1 - 1
        for spec in by_cat["K in a Row Loses"]:
            assert spec.completion_effect is CompletionEffect.LOSE
        for spec in by_cat["Infinite Board"]:
            assert spec.max_plies is not None
        for spec in by_cat["First Player Moves 2 pieces"]:
            assert spec.opening_placements_p1 == 2

    def test_no_duplicate_rule_keys(self):
        corpus = generate_corpus(count_per_category=8, seed=2)
        keys = [s.rule_key() for s in corpus]
        assert len(keys) == len(set(keys))

    def test_impossible_template_raises(self):
        bad = {
            "K in a Row (Square)": CategoryTemplate(
                "K in a Row (Square)", "square", dim_range=(3, 3), k_range=(5, 10)
            )
        }
        with pytest.raises(GenerationError):
            generate_corpus(
                count_per_category=3, seed=0,
                categories=["K in a Row (Square)"], templates=bad,
            )

    def test_unknown_category_rejected(self):
        with pytest.raises(GenerationError):
            generate_corpus(categories=["Chess Variants"])


class TestIngestHumanJudgments:
    def write_csv(self, tmp_path, rows, header="participant_id,game_id,q1,q2"):
        path = tmp_path / "human.csv"
        path.write_text("\n".join([header] + rows) + "\n")
        return path

    def test_well_formed_payoff_rows(self, tmp_path):
        path = self.write_csv(tmp_path, ["p1,ttt,70,30", "p2,ttt,40,60"])
        report = ingest_human_judgments(path, Query.PAYOFF, ["ttt"])
        assert len(report.samples) == 2 and not report.rejected
        assert report.samples[0].evaluator_id == "human:p1"
        assert report.samples[0].payoff == pytest.approx(
            (1 - (0.3 + 0.7 * 0.7)) * -1 + 0.7 * 0.7
        )
        assert report.per_game_counts == {"ttt": 2}

    def test_out_of_range_row_rejected_run_continues(self, tmp_path):
        path = self.write_csv(tmp_path, ["p1,ttt,150,30", "p2,ttt,40,60"])
        report = ingest_human_judgments(path, Query.PAYOFF, ["ttt"])
        assert len(report.samples) == 1
        assert len(report.rejected) == 1
        assert "q1 out of range" in report.rejected[0]["reasons"][0]

    def test_unknown_game_rejected(self, tmp_path):
        path = self.write_csv(tmp_path, ["p1,mystery,70,30"])
        report = ingest_human_judgments(path, Query.PAYOFF, ["ttt"])
        assert not report.samples and len(report.rejected) == 1

    def test_funness_rating_column(self, tmp_path):
        path = self.write_csv(
            tmp_path, ["p1,ttt,55", "p2,ttt,nonsense"],
            header="participant_id,game_id,rating",
        )
        report = ingest_human_judgments(path, Query.FUNNESS, ["ttt"])
        assert len(report.samples) == 1 and report.samples[0].funness == 55.0
        assert len(report.rejected) == 1


class TestCrashThenAppend:
    def test_append_after_torn_write_stays_loadable(self, tmp_path):
        path = tmp_path / "r.jsonl"
        write_records(path, [{"i": 0}, {"i": 1}], kind="solves")
        path.write_bytes(path.read_bytes()[:-4])  # crash mid-record
        with pytest.warns(UserWarning, match="partial final record"):
            write_records(path, [{"i": 2}], kind="solves", append=True)
        assert read_records(path, kind="solves") == [{"i": 0}, {"i": 2}]

    def test_resume_after_torn_write(self, tmp_path):
        # A torn sample store must not poison the resumed run.
        from gameval.gateway import Gateway, ProviderConfig, StubJudgeTransport
        from gameval.harness import LlmEvaluator, run_evaluator
        from gameval.prompts import Query
        from gameval.games import tic_tac_toe

        corpus = [tic_tac_toe()]
        provider = ProviderConfig(provider_id="stub", model_name="j")
        mk = lambda: LlmEvaluator("stub:j", provider, Gateway(StubJudgeTransport(seed=1)))
        run_evaluator(corpus, mk(), Query.PAYOFF, rollouts=6, run_dir=tmp_path,
                      parallelism=1)
        samples_path = tmp_path / "samples.jsonl"
        samples_path.write_bytes(samples_path.read_bytes()[:-10])
        with pytest.warns(UserWarning):
            result = run_evaluator(corpus, mk(), Query.PAYOFF, rollouts=6,
                                   run_dir=tmp_path, parallelism=1)
        assert result.new_calls == 1  # only the torn rollout is redone
        assert len(read_samples(samples_path)) == 6
