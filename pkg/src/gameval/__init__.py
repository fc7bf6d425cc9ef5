"""gameval: evaluating evaluations of grid games.

A rule engine for a parameterized family of k-in-a-row variants,
gameplay agents and game-theoretic solvers that produce payoff
evaluations, a gateway for eliciting judgments from language models,
and a metric suite that scores any evaluator against any reference.
"""

from .agents import (
    AgentConfig,
    AgentKind,
    PayoffEstimate,
    agent_payoff_estimate,
    choose_move,
    play_game,
)
from .games import (
    CATEGORIES,
    Board,
    CompletionEffect,
    Finite,
    GameSpec,
    GameState,
    Infinite,
    LineRule,
    Status,
    apply_move,
    canonicalize,
    initial_state,
    legal_moves,
    novelty_traits,
    terminal_status,
    tic_tac_toe,
)
from .gateway import (
    Completion,
    Gateway,
    HttpChatTransport,
    ProviderConfig,
    ScriptedTransport,
    StubJudgeTransport,
    aggregate_codes,
    apply_direct_filter,
    code_trace,
    parse_response,
)
from .harness import AgentPairEvaluator, LlmEvaluator, RunResult, run_evaluator
from .metrics import (
    BootstrapCI,
    EvalReport,
    accuracy_within,
    bootstrap_ci,
    combine_payoff,
    mean_abs_dev,
    r_squared,
    split_half,
    wasserstein_binned,
)
from .prompts import PromptMode, Query, build_prompt, game_description
from .records import CODE_LABELS, FailureRecord, JudgmentSample, TraceRecord
from .solver import (
    SolveRecord,
    SolverPolicy,
    estimate_via_mcts,
    game_theoretic_payoff,
    solve_exact,
)
from .store import (
    GenerationError,
    IngestReport,
    generate_corpus,
    ingest_human_judgments,
    read_corpus,
    read_samples,
    write_corpus,
    write_samples,
)
