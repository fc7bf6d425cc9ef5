"""Operator entry point: corpus-gen | solve | simulate | llm-run |
code-traces | compare | report.

Every command reads and writes only the documented line-delimited
stores. Exit codes: 0 success, 2 configuration, 3 data, 4 provider,
5 internal error. A JSON config file may supply per-command flag
defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from .agents import AgentConfig, AgentKind
from .games import GameSpec, novelty_traits
from .gateway import (
    Gateway,
    HttpChatTransport,
    ProviderConfig,
    ProviderError,
    StubJudgeTransport,
    code_records,
)
from .harness import (
    AgentPairEvaluator,
    ConfigError,
    LlmEvaluator,
    RunStore,
    run_evaluator,
)
from .metrics import (
    EvalReport,
    UndefinedMetricError,
    accuracy_within,
    bootstrap_ci,
    mean_abs_dev,
    r_squared,
    split_half,
    wasserstein_binned,
)
from .prompts import PromptMode, Query, build_prompt
from .records import (
    CODE_LABELS,
    FailureRecord,
    JudgmentSample,
    solve_to_record,
    trace_from_record,
    trace_to_record,
)
from .solver import SolverPolicy, game_theoretic_payoff
from .store import (
    CorruptRecordError,
    GenerationError,
    generate_corpus,
    ingest_human_judgments,
    read_corpus,
    read_records,
    read_samples,
    write_corpus,
    write_records,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PROVIDER = 4
EXIT_INTERNAL = 5

#: Relative store paths resolve against this directory when it is set.
DATA_DIR_ENV = "GAMEVAL_DATA_DIR"


def data_path(path: str | None) -> str | None:
    if path in (None, "-"):
        return path
    base = os.environ.get(DATA_DIR_ENV)
    if base and not Path(path).is_absolute():
        return str(Path(base) / path)
    return path


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="")


def _write_table(out_path: str | None, header: list[str], rows: list[list]) -> None:
    fh = _open_out(out_path)
    try:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


# --- commands -----------------------------------------------------------------

def cmd_corpus_gen(args) -> int:
    cats = args.categories.split(",") if args.categories else None
    corpus = generate_corpus(
        count_per_category=args.per_category, seed=args.seed, categories=cats
    )
    write_corpus(args.out, corpus)
    _log(f"wrote {len(corpus)} specs to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    corpus = read_corpus(args.corpus)
    if args.only_game:
        corpus = [s for s in corpus if s.game_id == args.only_game]
        if not corpus:
            raise ConfigError(f"game {args.only_game!r} not in corpus")
    policy = SolverPolicy(
        node_budget=int(args.node_budget),
        mcts_iterations=args.mcts_iterations,
        mcts_epsilon=args.epsilon,
        mcts_window=args.window,
        mcts_exploration=args.exploration,
        seed=args.seed,
    )
    records = []
    for spec in corpus:
        rec = game_theoretic_payoff(spec, policy)
        records.append(
            solve_to_record(rec.game_id, rec.value, rec.method,
                            rec.nodes_or_iterations, rec.seed)
        )
        _log(f"{rec.game_id}: value={rec.value} method={rec.method}")
    write_records(args.out, records, kind="solves")
    solved = sum(1 for r in records if r["value"] is not None)
    _log(f"estimated {solved}/{len(records)} games -> {args.out}")
    return EXIT_OK


def _agent_config(kind: str, args) -> AgentConfig:
    return AgentConfig(
        kind=AgentKind(kind),
        seed=args.seed,
        intuitive_temperature=args.intuitive_temperature,
        expert_depth=args.expert_depth,
        mcts_iterations=args.agent_mcts_iterations,
        mcts_exploration=args.exploration,
    )


def cmd_simulate(args) -> int:
    corpus = read_corpus(args.corpus)
    p1 = _agent_config(args.p1, args)
    p2 = _agent_config(args.p2, args)
    evaluator_id = args.evaluator_id or f"agent:{p1.label()}-vs-{p2.label()}"
    evaluator = AgentPairEvaluator(evaluator_id, p1, p2, n_games=args.n_games)
    result = run_evaluator(
        corpus, evaluator, Query.PAYOFF, seed=args.seed,
        run_dir=args.run_dir, corpus_path=str(args.corpus),
    )
    _log(
        f"{evaluator_id}: {len(result.samples)} new samples, "
        f"{result.skipped} games already done -> {args.run_dir}"
    )
    return EXIT_OK


def _provider_from_args(args) -> ProviderConfig:
    return ProviderConfig(
        provider_id=args.provider_id,
        model_name=args.model,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
        reasoning_effort=args.reasoning_effort,
        prompt_mode=PromptMode(args.mode),
        r1_inline_system=args.inline_system,
    )


def _make_gateway(provider_id: str, seed: int) -> Gateway:
    if provider_id == "stub":
        return Gateway(StubJudgeTransport(seed=seed))
    return Gateway(HttpChatTransport())


def cmd_llm_run(args) -> int:
    corpus = read_corpus(args.corpus)
    provider = _provider_from_args(args)
    query = Query(args.query)
    if args.dry_run:
        store = RunStore(args.run_dir if Path(args.run_dir, "samples.jsonl").exists() else None)
        planned = 0
        for spec in corpus:
            system_text, user_text = build_prompt(
                spec, query, provider.prompt_mode, inline_system=provider.r1_inline_system
            )
            missing = [
                r for r in range(args.rollouts)
                if not store.has(provider.evaluator_id(), spec.game_id, query, r)
            ]
            planned += len(missing)
            print(f"=== {spec.game_id} ({len(missing)} calls) ===")
            print("--- system ---")
            print(system_text)
            print("--- user ---")
            print(user_text)
        print(f"planned calls: {planned}")
        return EXIT_OK
    evaluator = LlmEvaluator(
        evaluator_id=provider.evaluator_id(),
        provider=provider,
        gateway=_make_gateway(args.provider_id, args.seed),
    )
    result = run_evaluator(
        corpus, evaluator, query, rollouts=args.rollouts, seed=args.seed,
        run_dir=args.run_dir, parallelism=args.parallelism,
        corpus_path=str(args.corpus),
    )
    _log(
        f"{evaluator.evaluator_id}: {len(result.samples)} samples, "
        f"{len(result.failures)} failures, {result.skipped} skipped, "
        f"{result.new_calls} gateway calls -> {args.run_dir}"
    )
    return EXIT_OK


def cmd_code_traces(args) -> int:
    recs = [trace_from_record(r) for r in read_records(args.traces, kind="traces")]
    labels = CODE_LABELS if args.labels == "all" else tuple(args.labels.split(","))
    unknown = set(labels) - set(CODE_LABELS)
    if unknown:
        raise ConfigError(f"unknown labels: {sorted(unknown)}")
    coder = ProviderConfig(
        provider_id=args.provider_id, model_name=args.model,
        prompt_mode=PromptMode.COT,
    )
    gateway = _make_gateway(args.provider_id, args.seed)
    codeable = [r for r in recs if r.trace_text]
    failures = code_records(gateway, coder, codeable, labels, recode=args.recode)
    write_records(args.out, (trace_to_record(r) for r in recs), kind="traces")
    _log(
        f"coded {len(codeable)} traces x {len(labels)} labels "
        f"({len(failures)} failures) -> {args.out}"
    )
    return EXIT_OK


# --- compare ------------------------------------------------------------------

def _judgment_value(sample: JudgmentSample, query: Query) -> float:
    return sample.payoff if query is Query.PAYOFF else sample.funness


def _samples_by_game(samples, query: Query) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {}
    for s in samples:
        if isinstance(s, FailureRecord) or s.query is not query:
            continue
        out.setdefault(s.game_id, []).append(_judgment_value(s, query))
    return out


def _load_reference(args, query: Query) -> dict[str, list[float]] | dict[str, int]:
    if args.reference == "optimal":
        if not args.solves:
            raise ConfigError("--reference optimal needs --solves")
        values = {}
        for rec in read_records(args.solves, kind="solves"):
            if rec["value"] is not None:
                values[rec["game_id"]] = int(rec["value"])
        return values
    if args.reference == "human":
        if not args.human_file or not args.corpus:
            raise ConfigError("--reference human needs --human-file and --corpus")
        ids = [s.game_id for s in read_corpus(args.corpus)]
        report = ingest_human_judgments(args.human_file, query, ids)
        if report.rejected:
            _log(f"ingest rejected {len(report.rejected)} rows")
        return _samples_by_game(report.samples, query)
    return _samples_by_game(read_samples(args.reference), query)


def _compare_reports(args) -> list[EvalReport]:
    query = Query(args.query)
    a_by_game = _samples_by_game(read_samples(args.a), query)
    if not a_by_game:
        raise ConfigError(f"no {query.value} samples in {args.a}")
    metric = args.metric
    vs_optimal = args.reference == "optimal"
    if args.reference in ("optimal", "human"):
        ref_name = args.reference
    else:
        ref_name = Path(args.reference).stem
    comparison_id = f"{Path(args.a).stem}-vs-{ref_name}"
    params = {"query": query.value, "unit": args.unit, "n_boot": args.n_boot, "seed": args.seed}

    categories = None
    if args.by_category:
        if not args.corpus:
            raise ConfigError("--by-category needs --corpus")
        categories = {s.game_id: s.category for s in read_corpus(args.corpus)}

    if metric == "splithalf":
        groups = {g: np.array(v) for g, v in a_by_game.items() if len(v) >= 2}
        ci = bootstrap_ci(
            groups,
            lambda gs: split_half(gs, n_splits=args.n_splits, seed=args.seed),
            n_boot=args.n_boot, seed=args.seed, unit=args.unit,
        )
        params["n_splits"] = args.n_splits
        return [EvalReport(comparison_id, "splithalf", ci.point, ci.low, ci.high,
                           n_games=len(groups), parameters=params)]

    reference = _load_reference(args, query)
    if vs_optimal and metric in ("wasserstein",):
        raise ConfigError("wasserstein compares judgment distributions, not optima")

    shared = sorted(set(a_by_game) & set(reference))
    if len(shared) < 2:
        raise ConfigError("need at least 2 games shared between the two sides")

    lohi = (-1.0, 1.0) if query is Query.PAYOFF else (0.0, 100.0)

    def score(pairs) -> float:
        """The metric over (a samples, b samples-or-optimum) game pairs."""
        if metric == "wasserstein":
            return float(np.mean([
                wasserstein_binned(a, b, lohi, bins=args.bins) for a, b in pairs
            ]))
        a = [float(np.mean(pa)) for pa, _ in pairs]
        b = [float(pb) if vs_optimal else float(np.mean(pb)) for _, pb in pairs]
        if metric == "r2":
            try:
                return r_squared(b, a)
            except UndefinedMetricError:
                return float("nan")  # degenerate resample; dropped by bootstrap_ci
        if metric == "accuracy":
            return accuracy_within(a, b, threshold=args.threshold)
        return mean_abs_dev(a, b)

    if metric == "wasserstein":
        params["bins"] = args.bins
    if metric == "accuracy":
        params["threshold"] = args.threshold

    def one_report(games, grouping) -> EvalReport:
        # Games unit: whole (a, b) game pairs are resampled together.
        # Judgments unit: individual judgments are resampled within each
        # game, on both sides. Either way the metric is recomputed from
        # raw samples.
        def pair_for(gid) -> tuple:
            return a_by_game[gid], reference[gid]

        if args.unit == "games":
            marker_groups = {gid: np.array([0.0]) for gid in games}

            def statistic(gs: dict[str, np.ndarray]) -> float:
                picked = [key.split("#")[0] for key in gs]
                return score([pair_for(gid) for gid in picked])

        else:
            marker_groups = {}
            for gid in games:
                marker_groups[f"{gid}|a"] = np.asarray(a_by_game[gid], dtype=float)
                if not vs_optimal:
                    marker_groups[f"{gid}|b"] = np.asarray(reference[gid], dtype=float)

            def statistic(gs: dict[str, np.ndarray]) -> float:
                pairs = []
                for gid in games:
                    b = reference[gid] if vs_optimal else gs[f"{gid}|b"]
                    pairs.append((gs[f"{gid}|a"], b))
                return score(pairs)

        ci = bootstrap_ci(marker_groups, statistic, n_boot=args.n_boot,
                          seed=args.seed, unit=args.unit)
        return EvalReport(comparison_id, metric, ci.point, ci.low, ci.high,
                          n_games=len(games), grouping=grouping, parameters=params)

    reports = [one_report(shared, None)]
    if categories is not None:
        by_cat: dict[str, list[str]] = {}
        for gid in shared:
            by_cat.setdefault(categories.get(gid, "?"), []).append(gid)
        for cat in sorted(by_cat):
            if len(by_cat[cat]) >= 2:
                reports.append(one_report(by_cat[cat], cat))
    return reports


def cmd_compare(args) -> int:
    reports = _compare_reports(args)
    rows = [
        [r.comparison_id, r.metric, r.grouping or "", f"{r.value:.6g}",
         f"{r.ci_low:.6g}", f"{r.ci_high:.6g}", r.n_games, json.dumps(r.parameters)]
        for r in reports
    ]
    _write_table(
        args.out,
        ["comparison_id", "metric", "grouping", "value", "ci_low", "ci_high",
         "n_games", "parameters"],
        rows,
    )
    return EXIT_OK


# --- report -------------------------------------------------------------------

def _trait_group(spec: GameSpec) -> str:
    return str(novelty_traits(spec))


def cmd_report(args) -> int:
    if args.tokens or args.codes:
        traces = [trace_from_record(r) for r in read_records(args.traces, kind="traces")]
        if not traces:
            raise ConfigError(f"no traces in {args.traces}")
    if args.tokens:
        if not args.corpus:
            raise ConfigError("--tokens needs --corpus for grouping")
        specs = {s.game_id: s for s in read_corpus(args.corpus)}
        per_game: dict[str, list[int]] = {}
        for t in traces:
            if t.reasoning_tokens is not None:
                per_game.setdefault(t.game_id, []).append(t.reasoning_tokens)
        grouped: dict[str, list[float]] = {}
        for gid, tokens in per_game.items():
            spec = specs.get(gid)
            if spec is None:
                continue
            group = _trait_group(spec) if args.group_by == "traits" else spec.category
            grouped.setdefault(group, []).append(statistics.median(tokens))
        rows = [
            [g, len(v), f"{statistics.mean(v):.1f}",
             f"{statistics.stdev(v):.1f}" if len(v) > 1 else "0.0"]
            for g, v in sorted(grouped.items())
        ]
        _write_table(args.out, ["group", "n_games", "mean_median_tokens", "sd_median_tokens"], rows)
        return EXIT_OK
    if args.codes:
        from .gateway import aggregate_codes

        cats = None
        if args.group_by == "category":
            if not args.corpus:
                raise ConfigError("--group-by category needs --corpus")
            cats = {s.game_id: s.category for s in read_corpus(args.corpus)}
        group_by = {"category": "category", "model": "model", "game": "game"}.get(args.group_by)
        if group_by is None:
            raise ConfigError("--codes supports --group-by model|game|category")
        rows = []
        for row in aggregate_codes(traces, group_by, cats):
            rows.append([
                row.group, row.label,
                "" if row.payoff_rate is None else f"{row.payoff_rate:.4f}",
                "" if row.funness_rate is None else f"{row.funness_rate:.4f}",
                row.n_payoff, row.n_funness,
            ])
        _write_table(args.out, ["group", "label", "payoff_rate", "funness_rate",
                                "n_payoff", "n_funness"], rows)
        return EXIT_OK
    # default: per-category judgment summary of one samples store
    if not args.samples or not args.corpus:
        raise ConfigError("report needs --samples and --corpus (or --tokens/--codes)")
    query = Query(args.query)
    samples = read_samples(args.samples)
    specs = {s.game_id: s for s in read_corpus(args.corpus)}
    per_game = _samples_by_game(samples, query)
    grouped: dict[str, list[float]] = {}
    for gid, vals in per_game.items():
        spec = specs.get(gid)
        if spec is None:
            continue
        group = _trait_group(spec) if args.group_by == "traits" else spec.category
        grouped.setdefault(group, []).append(float(np.mean(vals)))
    rows = [
        [g, len(v), f"{np.mean(v):.4f}", f"{np.std(v, ddof=1):.4f}" if len(v) > 1 else "0.0"]
        for g, v in sorted(grouped.items())
    ]
    _write_table(args.out, ["group", "n_games", f"mean_{query.value}", "sd"], rows)
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gameval",
        description="Grid-game evaluation pipeline: generate, solve, elicit, score.",
    )
    parser.add_argument("--config", help="JSON file of per-command flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus-gen", help="generate a game corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--per-category", type=int, default=11)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--categories", default=None, help="comma-separated subset")
    p.set_defaults(func=cmd_corpus_gen)

    p = sub.add_parser("solve", help="estimate game-theoretic payoffs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--node-budget", type=float, default=50_000_000)
    p.add_argument("--mcts-iterations", type=int, default=200_000)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--exploration", type=float, default=1.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only-game", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="agent-pair payoff evaluation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--run-dir", required=True)
    kinds = [k.value for k in AgentKind]
    p.add_argument("--p1", choices=kinds, required=True)
    p.add_argument("--p2", choices=kinds, required=True)
    p.add_argument("--n-games", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--evaluator-id", default=None)
    p.add_argument("--expert-depth", type=int, default=5)
    p.add_argument("--intuitive-temperature", type=float, default=1.0)
    p.add_argument("--agent-mcts-iterations", type=int, default=400)
    p.add_argument("--exploration", type=float, default=1.4)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("llm-run", help="LLM payoff/funness elicitation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--provider-id", required=True,
                   help="provider id; 'stub' runs the offline deterministic judge")
    p.add_argument("--model", required=True)
    p.add_argument("--query", choices=[q.value for q in Query], default="payoff")
    p.add_argument("--mode", choices=[m.value for m in PromptMode], default="cot")
    p.add_argument("--rollouts", type=int, default=20)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=32_000)
    p.add_argument("--reasoning-effort", choices=["low", "medium", "high"], default=None)
    p.add_argument("--inline-system", action="store_true",
                   help="prepend the system prompt to the user prompt")
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_llm_run)

    p = sub.add_parser("code-traces", help="YES/NO trace coding")
    p.add_argument("--traces", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--provider-id", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--labels", default="all",
                   help="comma-separated label subset, or 'all'")
    p.add_argument("--recode", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_code_traces)

    p = sub.add_parser("compare", help="score one evaluator against a reference")
    p.add_argument("--a", required=True, help="samples store of the evaluator")
    p.add_argument("--reference", required=True,
                   help="'optimal', 'human', or a samples store path")
    p.add_argument("--metric", choices=["r2", "accuracy", "dev", "wasserstein", "splithalf"],
                   required=True)
    p.add_argument("--query", choices=[q.value for q in Query], default="payoff")
    p.add_argument("--solves", default=None)
    p.add_argument("--human-file", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--n-boot", type=int, default=10_000)
    p.add_argument("--n-splits", type=int, default=100)
    p.add_argument("--unit", choices=["games", "judgments"], default="games")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--by-category", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="plot-ready breakdown tables")
    p.add_argument("--samples", default=None)
    p.add_argument("--traces", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--query", choices=[q.value for q in Query], default="payoff")
    p.add_argument("--tokens", action="store_true", help="reasoning-token summary")
    p.add_argument("--codes", action="store_true", help="trace-code rate summary")
    p.add_argument("--group-by", choices=["category", "traits", "model", "game"],
                   default="category")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_report)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Inject config-file values as subparser defaults; flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    with open(known.config, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ConfigError("config file must hold an object of per-command defaults")
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    for command, defaults in config.items():
        sub = sub_actions[0].choices.get(command)
        if sub is None:
            raise ConfigError(f"config names unknown command {command!r}")
        valid = {a.dest for a in sub._actions}
        unknown = set(defaults) - valid
        if unknown:
            raise ConfigError(f"config for {command!r} names unknown keys {sorted(unknown)}")
        sub.set_defaults(**defaults)
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        for dest in ("out", "corpus", "run_dir", "solves", "human_file",
                     "traces", "samples", "a"):
            if hasattr(args, dest):
                setattr(args, dest, data_path(getattr(args, dest)))
        if getattr(args, "reference", None) not in (None, "optimal", "human"):
            args.reference = data_path(args.reference)
        return args.func(args)
    except (ConfigError, GenerationError) as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except (CorruptRecordError, FileNotFoundError) as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA
    except ProviderError as exc:
        _log(f"provider error: {exc}")
        return EXIT_PROVIDER
    except ValueError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        _log(f"internal error: {exc!r}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
