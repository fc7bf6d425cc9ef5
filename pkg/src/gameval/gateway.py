"""Client layer for eliciting judgments from model providers.

Holds the provider abstraction (a minimal request/response transport so
test doubles can exercise the whole pipeline offline), response parsing
and filtering, think-segment extraction, and the YES/NO trace-coding
protocol with its fixed per-label prompts.
"""

from __future__ import annotations

import dataclasses
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .prompts import PromptMode, Query
from .records import CODE_LABELS, TraceRecord

REASONING_EFFORTS = ("low", "medium", "high")

#: Models sampled at temperature 1.0; everything else defaults to 0.7.
_HOT_MODEL_PREFIXES = ("o1", "o3", "gpt-5")


def default_temperature(model_name: str) -> float:
    name = model_name.lower()
    return 1.0 if any(name.startswith(p) for p in _HOT_MODEL_PREFIXES) else 0.7


class ProviderError(Exception):
    """Base class for provider-side failures."""


class ProviderAuthError(ProviderError):
    """Credentials rejected; never retried."""


class ProviderRateLimitError(ProviderError):
    """Transient throttling; retried with backoff."""


class ProviderTimeoutError(ProviderError):
    """Transient timeout; retried with backoff."""


class CodingError(Exception):
    """The trace coder returned something other than YES/NO."""


@dataclass(frozen=True)
class ProviderConfig:
    provider_id: str
    model_name: str
    temperature: float | None = None  # None: default by model family
    max_tokens: int = 32_000
    reasoning_effort: str | None = None
    prompt_mode: PromptMode = PromptMode.COT
    r1_inline_system: bool = False

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.reasoning_effort is not None:
            if self.prompt_mode is not PromptMode.REASONING:
                raise ValueError("reasoning_effort is only valid in REASONING mode")
            if self.reasoning_effort not in REASONING_EFFORTS:
                raise ValueError(f"reasoning_effort must be one of {REASONING_EFFORTS}")
        if self.temperature is not None and self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    @property
    def effective_temperature(self) -> float:
        if self.temperature is not None:
            return self.temperature
        return default_temperature(self.model_name)

    def evaluator_id(self) -> str:
        return f"{self.provider_id}:{self.model_name}:{self.prompt_mode.value}"


@dataclass
class RawCompletion:
    """What a transport returns before gateway post-processing."""

    text: str
    trace_text: str | None = None
    reasoning_tokens: int | None = None
    truncated: bool = False


@dataclass(frozen=True)
class Completion:
    text: str
    trace_text: str | None = None
    reasoning_tokens: int | None = None
    truncated: bool = False


class Transport(Protocol):
    def request(self, provider: ProviderConfig, system_text: str, user_text: str) -> RawCompletion:
        ...


_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)


def extract_think_segments(text: str) -> tuple[str, str | None]:
    """Split think-delimited reasoning out of a completion.

    Returns (answer text, trace text or None). Multiple think segments
    are concatenated in order.
    """
    segments = _THINK_RE.findall(text)
    if not segments:
        return text, None
    remainder = _THINK_RE.sub("", text).strip()
    return remainder, "\n".join(s.strip() for s in segments)


def approx_token_count(text: str) -> int:
    """Whitespace word count: the fallback when a provider reports nothing."""
    return len(text.split())


class Gateway:
    """Retrying wrapper over a transport, with trace/token post-processing.

    Auth failures are fatal; rate limits and timeouts are retried with
    exponential backoff up to ``max_retries`` times.
    """

    def __init__(self, transport: Transport, max_retries: int = 3,
                 backoff_s: float = 0.5, sleep=time.sleep):
        self.transport = transport
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.sleep = sleep

    def complete(self, provider: ProviderConfig, system_text: str, user_text: str) -> Completion:
        attempt = 0
        while True:
            try:
                raw = self.transport.request(provider, system_text, user_text)
                break
            except ProviderAuthError:
                raise
            except (ProviderRateLimitError, ProviderTimeoutError):
                if attempt >= self.max_retries:
                    raise
                self.sleep(self.backoff_s * (2 ** attempt))
                attempt += 1
        text, trace = raw.text, raw.trace_text
        if trace is None:
            text, trace = extract_think_segments(text)
        tokens = raw.reasoning_tokens
        if tokens is None and trace is not None:
            tokens = approx_token_count(trace)
        return Completion(
            text=text, trace_text=trace, reasoning_tokens=tokens, truncated=raw.truncated
        )


# --- response parsing --------------------------------------------------------

@dataclass(frozen=True)
class ParseResult:
    status: str  # "ok" | "failed"
    q1: float | None = None
    q2: float | None = None
    funness: float | None = None
    reason: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


_DECOR = r"[\s\*_`]*"
_NUM = r"([-+]?\d+(?:\.\d+)?)"
_Q1_VALUE = re.compile(r"RESPONSE-Q1" + _DECOR + "=" + _DECOR + _NUM)
_Q2_VALUE = re.compile(r"RESPONSE-Q2" + _DECOR + "=" + _DECOR + _NUM)
_FUN_VALUE = re.compile(r"RESPONSE(?!-Q)" + _DECOR + "=" + _DECOR + _NUM)
_Q1_MARKER = re.compile(r"RESPONSE-Q1" + _DECOR + "=")
_Q2_MARKER = re.compile(r"RESPONSE-Q2" + _DECOR + "=")
_FUN_MARKER = re.compile(r"RESPONSE(?!-Q)" + _DECOR + "=")
_ANY_MARKER = re.compile(r"RESPONSE(-Q\d)?" + _DECOR + "=")


def _last_value(text: str, value_re: re.Pattern, marker_re: re.Pattern):
    values = value_re.findall(text)
    if values:
        return float(values[-1]), None
    if marker_re.search(text):
        return None, "not_a_number"
    return None, "missing_marker"


def parse_response(text: str, query: Query) -> ParseResult:
    """Extract the final answer markers from a model response.

    Total on arbitrary input: never raises, classifying failures as
    missing_marker / not_a_number / out_of_range. The LAST occurrence of
    each marker wins, since traces often rehearse earlier candidates.
    """
    if query is Query.PAYOFF:
        q1, err1 = _last_value(text, _Q1_VALUE, _Q1_MARKER)
        q2, err2 = _last_value(text, _Q2_VALUE, _Q2_MARKER)
        if err1 or err2:
            return ParseResult(status="failed", reason=err1 or err2)
        if not (0 <= q1 <= 100 and 0 <= q2 <= 100):
            return ParseResult(status="failed", reason="out_of_range")
        return ParseResult(status="ok", q1=q1, q2=q2)
    fun, err = _last_value(text, _FUN_VALUE, _FUN_MARKER)
    if err:
        return ParseResult(status="failed", reason=err)
    if not 0 <= fun <= 100:
        return ParseResult(status="failed", reason="out_of_range")
    return ParseResult(status="ok", funness=fun)


def cot_rationale(text: str) -> str:
    """The chain-of-thought portion of a response: text before the first
    answer marker. Empty when the response starts at the marker."""
    m = _ANY_MARKER.search(text)
    return (text if m is None else text[: m.start()]).strip()


DIRECT_PROSE_BUDGET = 40


def apply_direct_filter(record: TraceRecord, prose_budget: int = DIRECT_PROSE_BUDGET) -> TraceRecord:
    """Filter Direct-mode responses that rationalize before answering.

    A successfully parsed response whose text carries more than
    ``prose_budget`` non-whitespace characters before the first answer
    marker is marked filtered. Failed parses pass through untouched, so
    filtering never masks a failure.
    """
    if record.parse_status != "ok":
        return record
    m = _ANY_MARKER.search(record.raw_text)
    if m is None:
        return record
    prose = sum(1 for ch in record.raw_text[: m.start()] if not ch.isspace())
    if prose > prose_budget:
        return dataclasses.replace(record, parse_status="filtered")
    return record


# --- trace coding ------------------------------------------------------------

CODER_PROMPTS: dict[str, str] = {
    "AnalogicalReasoning": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace involves any explicit analogical reasoning.
That is, the reasoning traces involves a comparison to one or more other games.
Respond with only a single word.
Either:
YES if it involves analogical reasoning, or
NO if it does not involve any analogical reasoning.""",
    "MathematicalComputation": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace involves any explicit mathematical calculations.
That is, particular mathematical operators (+, -, *, /, etc) to assess the question.
The mathematics doesn't need to be correct, it just needs to be explicit calculations.
The mathematical calculations should be precise; just simulating play doesn't count.
Respond with only a single word.
Either:
YES if it involves explicit mathematical calculations, or
NO if it does not involve any explicit mathematical calculations.""",
    "ExplicitSimulation": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace involves any explicit game simulation.
That is, that the trace includes explicit playout behavior for any game, clearly spelling out who moves on which turn.
Categorize whether the following includes explicit playout simulation.
The simulation doesn't need to be correct, nor go to the end of the game. But it needs to involve turn taking and move selection.
Respond with only a single word.
Either:
YES if it involves explicit playout simulation, or
NO if it does not involve any explicit simulation.""",
    "Balance": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace considers game balance when assessing funness.
That is, whether the trace makes any mention of the fairness of the game, whether the game is lopsided, whether a player has an advantage, etc.
Respond with only a single word.
Either:
YES if it mentions game balance, or
NO if it does not mention game balance""",
    "Challenge": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace considers game challenge when assessing funness.
That is, whether the trace makes any mention of the relative challengingness or ease of the game.
Respond with only a single word.
Either:
YES if it mentions game challengingness, or
NO if it does not mention game challengingness""",
    "Length": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace considers game length when assessing funness.
That is, whether the trace makes any mention of how long the game is expected to take.
Respond with only a single word.
Either:
YES if it mentions game length, or
NO if it does not mention game length""",
    "StrategicRichness": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace considers whether a game is strategically rich when assessing funness.
That is, whether the trace makes any mention of how much strategy the game involves (e.g., how much strategic depth it has).
Respond with only a single word.
Either:
YES if it mentions the strategic richness of a game, or
NO if it does not mention the strategic richness of a game""",
    "Novelty": """\
You are categorizing reasoning traces written by agents reasoning about games.
Your task is to categorize whether the trace considers game novelty when assessing funness.
That is, whether the trace makes any mention of how novel the game.
Respond with only a single word.
Either:
YES if it mentions game novelty, or
NO if it does not mention game novelty""",
}

_YES_NO_RE = re.compile(r"^[\s\*_`]*(yes|no)\b", re.IGNORECASE)


def code_trace(gateway: Gateway, coder: ProviderConfig, trace_text: str, label: str) -> bool:
    """Ask the coder model one YES/NO question about one trace."""
    if not trace_text:
        raise ValueError("trace_text must be non-empty")
    if label not in CODER_PROMPTS:
        raise ValueError(f"unknown label {label!r}")
    user_text = CODER_PROMPTS[label] + "\n\n" + trace_text
    completion = gateway.complete(coder, "", user_text)
    m = _YES_NO_RE.match(completion.text)
    if m is None:
        raise CodingError(f"coder reply is not YES/NO: {completion.text[:80]!r}")
    return m.group(1).lower() == "yes"


def code_records(
    gateway: Gateway,
    coder: ProviderConfig,
    records: Iterable[TraceRecord],
    labels: Iterable[str] = CODE_LABELS,
    recode: bool = False,
) -> list[tuple[TraceRecord, str, str]]:
    """Code every (trace, label) pair once; returns coding failures.

    Each pair costs exactly one coder call. Already coded labels are kept
    unless ``recode`` is set. Failures are returned as (record, label,
    reason) and leave the record's labels untouched.
    """
    failures = []
    for record in records:
        text = record.trace_text or ""
        for label in labels:
            if not recode and label in record.coder_labels:
                continue
            if not text:
                failures.append((record, label, "empty_trace"))
                continue
            try:
                record.coder_labels[label] = code_trace(gateway, coder, text, label)
            except (CodingError, ProviderError) as exc:
                failures.append((record, label, str(exc)))
    return failures


@dataclass(frozen=True)
class CodeRateRow:
    """Fraction of YES codes for one label within one group."""

    group: str
    label: str
    payoff_rate: float | None
    funness_rate: float | None
    n_payoff: int
    n_funness: int


def aggregate_codes(
    records: Iterable[TraceRecord],
    by: str,
    game_categories: dict[str, str] | None = None,
) -> list[CodeRateRow]:
    """Per-group YES rates for each coded label, paired across queries.

    ``by`` is one of model / game / category; grouping by category needs
    the game-to-category mapping.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    if by not in ("model", "game", "category"):
        raise ValueError(f"unknown grouping {by!r}")
    if by == "category" and game_categories is None:
        raise ValueError("grouping by category needs game_categories")

    def group_of(r: TraceRecord) -> str:
        if by == "model":
            return r.evaluator_id
        if by == "game":
            return r.game_id
        return game_categories[r.game_id]

    tallies: dict[tuple[str, str, Query], list[int]] = {}
    for r in records:
        for label, value in r.coder_labels.items():
            key = (group_of(r), label, r.query)
            cell = tallies.setdefault(key, [0, 0])
            cell[0] += int(value)
            cell[1] += 1
    rows = []
    groups = sorted({g for g, _, _ in tallies})
    for group in groups:
        for label in CODE_LABELS:
            pay = tallies.get((group, label, Query.PAYOFF))
            fun = tallies.get((group, label, Query.FUNNESS))
            if pay is None and fun is None:
                continue
            rows.append(
                CodeRateRow(
                    group=group,
                    label=label,
                    payoff_rate=pay[0] / pay[1] if pay else None,
                    funness_rate=fun[0] / fun[1] if fun else None,
                    n_payoff=pay[1] if pay else 0,
                    n_funness=fun[1] if fun else 0,
                )
            )
    return rows


# --- transports ---------------------------------------------------------------

@dataclass
class ScriptedTransport:
    """Replays a fixed list of completions (or raises scripted errors);
    records every request."""

    responses: list[RawCompletion | str | Exception]
    calls: list[tuple[str, str, str]] = field(default_factory=list)

    def request(self, provider: ProviderConfig, system_text: str, user_text: str) -> RawCompletion:
        self.calls.append((provider.provider_id, system_text, user_text))
        if not self.responses:
            raise ProviderError("scripted transport ran out of responses")
        nxt = self.responses.pop(0)
        if isinstance(nxt, str):
            return RawCompletion(text=nxt)
        if isinstance(nxt, Exception):
            raise nxt
        return nxt


class StubJudgeTransport:
    """Deterministic offline judge: answers derived from a hash of the prompt.

    Produces well-formed payoff or funness responses (detected from the
    marker instructions in the user prompt), plus YES/NO replies for
    coder prompts. Repeat requests with an identical prompt draw fresh
    values from the same seeded stream, so rollouts vary but the multiset
    of responses per prompt is reproducible. Useful for dry runs, demos,
    and end-to-end tests without network access.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.calls = 0
        self._lock = threading.Lock()
        self._seen: dict[int, int] = {}

    def _h(self, *parts) -> int:
        import hashlib

        blob = "\x1f".join(str(p) for p in parts).encode()
        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")

    def request(self, provider: ProviderConfig, system_text: str, user_text: str) -> RawCompletion:
        base = self._h(self.seed, provider.model_name, user_text)
        with self._lock:
            self.calls += 1
            occurrence = self._seen.get(base, 0)
            self._seen[base] = occurrence + 1
        h = self._h(base, occurrence)
        if user_text.startswith("You are categorizing reasoning traces"):
            return RawCompletion(text="YES" if h % 2 else "NO")
        if "RESPONSE-Q1" in user_text:
            q1 = h % 101
            q2 = (h // 101) % 101
            text = f"RESPONSE-Q1 = {q1} and RESPONSE-Q2 = {q2}"
        else:
            text = f"RESPONSE = {h % 101}"
        if provider.prompt_mode is not PromptMode.DIRECT:
            text = "Considering the board and the win condition.\n" + text
        return RawCompletion(text=text, reasoning_tokens=50 + h % 200)


class HttpChatTransport:
    """OpenAI-compatible chat-completions client.

    Credentials come from the environment per provider id:
    ``GAMEVAL_<ID>_API_KEY`` and ``GAMEVAL_<ID>_BASE_URL``.
    """

    def __init__(self, timeout_s: float = 120.0):
        self.timeout_s = timeout_s

    def request(self, provider: ProviderConfig, system_text: str, user_text: str) -> RawCompletion:
        import requests

        key_var = f"GAMEVAL_{provider.provider_id.upper().replace('-', '_')}_API_KEY"
        url_var = f"GAMEVAL_{provider.provider_id.upper().replace('-', '_')}_BASE_URL"
        api_key = os.environ.get(key_var)
        base_url = os.environ.get(url_var)
        if not api_key or not base_url:
            raise ProviderAuthError(f"set {key_var} and {url_var} for provider {provider.provider_id!r}")
        messages = []
        if system_text:
            messages.append({"role": "system", "content": system_text})
        messages.append({"role": "user", "content": user_text})
        body = {
            "model": provider.model_name,
            "messages": messages,
            "temperature": provider.effective_temperature,
            "max_tokens": provider.max_tokens,
        }
        if provider.reasoning_effort is not None:
            body["reasoning_effort"] = provider.reasoning_effort
        try:
            resp = requests.post(
                base_url.rstrip("/") + "/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout_s,
            )
        except requests.Timeout as exc:
            raise ProviderTimeoutError(str(exc)) from exc
        except requests.RequestException as exc:
            raise ProviderError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise ProviderAuthError(f"HTTP {resp.status_code}")
        if resp.status_code == 429:
            raise ProviderRateLimitError("rate limited")
        if resp.status_code >= 500:
            raise ProviderTimeoutError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        payload = resp.json()
        choice = payload["choices"][0]
        usage = payload.get("usage") or {}
        details = usage.get("completion_tokens_details") or {}
        return RawCompletion(
            text=choice["message"]["content"] or "",
            trace_text=choice["message"].get("reasoning_content"),
            reasoning_tokens=details.get("reasoning_tokens"),
            truncated=choice.get("finish_reason") == "length",
        )
