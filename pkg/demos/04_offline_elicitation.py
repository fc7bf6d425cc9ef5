"""The full elicitation pipeline, offline, against the stub judge.

Builds a corpus, elicits payoff judgments rollout by rollout through the
gateway (prompt -> completion -> parse -> sample), then codes the
chain-of-thought traces with a stub coder and aggregates YES rates.

Run: python demos/04_offline_elicitation.py
"""

import tempfile
from pathlib import Path

from gameval import (
    Gateway,
    LlmEvaluator,
    ProviderConfig,
    Query,
    StubJudgeTransport,
    aggregate_codes,
    build_prompt,
    generate_corpus,
    run_evaluator,
)
from gameval.gateway import code_records
from gameval.prompts import PromptMode

corpus = generate_corpus(count_per_category=1, seed=0)
print(f"corpus: {len(corpus)} games across {len({s.category for s in corpus})} categories")

# What one elicitation looks like on the wire:
system_text, user_text = build_prompt(corpus[0], Query.PAYOFF, PromptMode.COT)
print("\n--- user prompt for", corpus[0].game_id, "---")
print(user_text.split("Q1:")[0].rstrip())
print("...")

provider = ProviderConfig(provider_id="stub", model_name="offline-judge")
evaluator = LlmEvaluator("stub:offline-judge", provider, Gateway(StubJudgeTransport(seed=5)))

with tempfile.TemporaryDirectory() as tmp:
    run_dir = Path(tmp) / "run"
    result = run_evaluator(
        corpus, evaluator, Query.PAYOFF, rollouts=20, run_dir=run_dir, parallelism=1
    )
    print(f"\ncollected {len(result.samples)} samples, {len(result.failures)} failures")
    sample = result.samples[0]
    print(f"first sample: q1={sample.q1_win_given_not_draw} q2={sample.q2_draw} "
          f"payoff={sample.payoff:+.3f}")

    # Re-running resumes from the store: nothing new to do.
    again = run_evaluator(
        corpus, evaluator, Query.PAYOFF, rollouts=20, run_dir=run_dir, parallelism=1
    )
    print(f"resume: {again.new_calls} new calls, {again.skipped} rollouts already stored")

    # YES/NO coding of the stored traces, then rate aggregation.
    coder = ProviderConfig(provider_id="stub", model_name="offline-coder")
    coder_gateway = Gateway(StubJudgeTransport(seed=9))
    traces = [t for t in result.traces if t.trace_text]
    code_records(coder_gateway, coder, traces, labels=["ExplicitSimulation", "Balance"])
    rows = aggregate_codes(traces, by="model")
    for row in rows:
        print(f"label={row.label:20s} payoff YES rate={row.payoff_rate:.2f} "
              f"over {row.n_payoff} traces")
