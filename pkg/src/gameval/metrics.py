"""Scoring for judgment comparisons.

Covers the payoff combination of the two elicited probabilities, squared
Pearson correlation, accuracy within a payoff threshold, mean absolute
deviation, binned 1-D earth-mover distance, percentile bootstrap CIs,
and split-half reliability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

METRIC_NAMES = ("r2", "accuracy", "dev", "wasserstein", "splithalf")


class UndefinedMetricError(ValueError):
    """The metric has no defined value for these inputs (e.g. zero variance)."""


def combine_payoff(q1: float, q2: float) -> float:
    """Fold the two elicited probabilities into a single payoff in [-1, 1].

    ``q1`` is the 0-100 chance that player 1 wins given the game is not a
    draw; ``q2`` is the 0-100 chance of a draw. The win probability is
    ``(q1/100) * (1 - q2/100)``; the payoff is ``-1`` times the leftover
    loss probability plus the win probability.
    """
    if not (0 <= q1 <= 100):
        raise ValueError(f"q1 must be in [0, 100], got {q1}")
    if not (0 <= q2 <= 100):
        raise ValueError(f"q2 must be in [0, 100], got {q2}")
    p_draw = q2 / 100.0
    p_win = (q1 / 100.0) * (1.0 - p_draw)
    return (1.0 - (p_draw + p_win)) * -1.0 + p_win


def r_squared(reference: Sequence[float], candidate: Sequence[float]) -> float:
    """Squared Pearson correlation between two paired mean vectors."""
    ref = np.asarray(reference, dtype=float)
    cand = np.asarray(candidate, dtype=float)
    if ref.shape != cand.shape or ref.ndim != 1 or ref.size < 2:
        raise ValueError("inputs must be equal-length 1-D vectors with >= 2 entries")
    if not (np.isfinite(ref).all() and np.isfinite(cand).all()):
        raise ValueError("inputs must be finite")
    if np.ptp(ref) == 0 or np.ptp(cand) == 0:
        raise UndefinedMetricError("correlation undefined for zero-variance input")
    r = np.corrcoef(ref, cand)[0, 1]
    return float(r * r)


def accuracy_within(
    predictions: Sequence[float], optima: Sequence[float], threshold: float = 0.5
) -> float:
    """Fraction of predictions strictly within ``threshold`` of the optimum.

    The boundary is exclusive: a prediction exactly ``threshold`` away
    counts as wrong.
    """
    preds = np.asarray(predictions, dtype=float)
    opts = np.asarray(optima, dtype=float)
    if preds.shape != opts.shape:
        raise ValueError("predictions and optima must have equal length")
    if not np.isin(opts, (-1, 0, 1)).all():
        raise ValueError("optima must be in {-1, 0, 1}")
    return float(np.mean(np.abs(preds - opts) < threshold))


def mean_abs_dev(a: Sequence[float], b: Sequence[float]) -> float:
    """Mean absolute difference between paired per-game means."""
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.shape != xb.shape:
        raise ValueError("inputs must have equal length")
    return float(np.mean(np.abs(xa - xb)))


def wasserstein_binned(
    samples_a: Sequence[float],
    samples_b: Sequence[float],
    value_range: tuple[float, float],
    bins: int = 20,
) -> float:
    """Earth-mover distance between the binned histograms of two samples.

    Both samples are histogrammed over ``value_range`` with ``bins`` equal
    bins and normalized; the distance is the sum of absolute differences
    of the cumulative histograms times the bin width.
    """
    lo, hi = value_range
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if not (lo < hi):
        raise ValueError("range must satisfy lo < hi")
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("sample sets must be non-empty")
    if a.min() < lo or a.max() > hi or b.min() < lo or b.max() > hi:
        raise ValueError("samples must lie within the declared range")
    ha, _ = np.histogram(a, bins=bins, range=(lo, hi))
    hb, _ = np.histogram(b, bins=bins, range=(lo, hi))
    pa = ha / ha.sum()
    pb = hb / hb.sum()
    bin_width = (hi - lo) / bins
    return float(np.abs(np.cumsum(pa - pb)).sum() * bin_width)


@dataclass(frozen=True)
class BootstrapCI:
    low: float
    point: float
    high: float


GroupedSamples = Mapping[str, Sequence[float]]


def bootstrap_ci(
    samples: GroupedSamples,
    statistic: Callable[[dict[str, np.ndarray]], float],
    n_boot: int = 10_000,
    level: float = 0.95,
    seed: int | None = None,
    unit: str = "games",
) -> BootstrapCI:
    """Percentile bootstrap interval for a statistic of grouped samples.

    ``samples`` maps a game id to that game's individual judgments. The
    resampling unit is chosen by the caller: ``"games"`` resamples whole
    games with replacement, ``"judgments"`` resamples judgments within
    each game (the participants/rollouts unit). The point estimate is the
    plug-in statistic on the original data; the interval is the straight
    percentile interval, reported as computed.
    """
    if n_boot < 100:
        raise ValueError(f"n_boot must be >= 100, got {n_boot}")
    if unit not in ("games", "judgments"):
        raise ValueError(f"unknown resampling unit {unit!r}")
    if not samples:
        raise ValueError("samples must be non-empty")
    groups = {gid: np.asarray(vals, dtype=float) for gid, vals in samples.items()}
    for gid, vals in groups.items():
        if vals.size == 0:
            raise ValueError(f"group {gid!r} is empty")
    rng = np.random.default_rng(seed)
    point = float(statistic(groups))
    keys = list(groups)
    stats = np.empty(n_boot)
    for i in range(n_boot):
        if unit == "games":
            picked = rng.integers(len(keys), size=len(keys))
            resampled = {f"{keys[j]}#{pos}": groups[keys[j]] for pos, j in enumerate(picked)}
        else:
            resampled = {
                gid: vals[rng.integers(vals.size, size=vals.size)]
                for gid, vals in groups.items()
            }
        stats[i] = statistic(resampled)
    defined = stats[~np.isnan(stats)]
    if defined.size == 0:
        raise ValueError("statistic undefined on every bootstrap resample")
    alpha = (1.0 - level) / 2.0
    # NaN resamples (statistic undefined, e.g. zero-variance draws) are
    # dropped from the percentile computation.
    low, high = np.quantile(defined, [alpha, 1.0 - alpha])
    return BootstrapCI(low=float(low), point=point, high=float(high))


def split_half(
    per_game_judgments: GroupedSamples,
    n_splits: int = 100,
    seed: int | None = None,
) -> float:
    """Split-half reliability of per-game judgments.

    For each split, every game's judges are randomly divided into two
    disjoint halves; the result is the mean over splits of the squared
    Pearson correlation between the two per-game mean vectors. Games with
    a single judgment are excluded with a warning.
    """
    usable = {}
    for gid, vals in per_game_judgments.items():
        arr = np.asarray(vals, dtype=float)
        if arr.size < 2:
            warnings.warn(f"split_half: excluding game {gid!r} with {arr.size} judgment(s)")
            continue
        usable[gid] = arr
    if len(usable) < 2:
        raise ValueError("split_half needs >= 2 games with >= 2 judgments each")
    rng = np.random.default_rng(seed)
    gids = list(usable)
    scores = np.empty(n_splits)
    for s in range(n_splits):
        means_a = np.empty(len(gids))
        means_b = np.empty(len(gids))
        for i, gid in enumerate(gids):
            vals = usable[gid]
            perm = rng.permutation(vals.size)
            half = vals.size // 2
            means_a[i] = vals[perm[:half]].mean()
            means_b[i] = vals[perm[half:]].mean()
        scores[s] = r_squared(means_a, means_b)
    return float(scores.mean())


@dataclass(frozen=True)
class EvalReport:
    """One metric value with its bootstrap interval for a comparison."""

    comparison_id: str
    metric: str
    value: float
    ci_low: float
    ci_high: float
    n_games: int
    grouping: str | None = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.metric!r}")

    def as_row(self) -> dict:
        return {
            "comparison_id": self.comparison_id,
            "metric": self.metric,
            "grouping": self.grouping if self.grouping is not None else "",
            "value": self.value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_games": self.n_games,
            "parameters": self.parameters,
        }
